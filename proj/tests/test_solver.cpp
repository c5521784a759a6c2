#include <doctest.h>

#include <cmath>
#include <random>

#include "bswtv/admm.hpp"
#include "bswtv/error.hpp"
#include "bswtv/synthetic.hpp"
#include "oracles.hpp"

using namespace bswtv;

namespace {

FrameModel identity_frame(GrayImage y, NoiseParams np) {
  const Shape s = y.shape();
  return FrameModel{std::move(y), LinearOp::identity(s), std::move(np)};
}

double max_abs_diff(const GrayImage& a, const GrayImage& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

double variance(const GrayImage& x) {
  const double m = mean(x);
  double acc = 0.0;
  for (double v : x.data()) acc += (v - m) * (v - m);
  return acc / static_cast<double>(x.size());
}

// Random consensus state: identity data blocks and weighted difference blocks.
struct Instance {
  AdmmState state;
  std::vector<LinearOp> ops;
  std::vector<Eigen::MatrixXd> dense;
};

Instance random_instance(Shape s, std::size_t m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> r(0.2, 5.0);
  Instance in;
  const GrayImage phi = oracle::random_image(s.width, s.height, rng, 0.05, 1.0);
  in.ops = make_constraint_ops(m, phi);
  for (std::size_t i = 0; i < m; ++i) in.dense.push_back(oracle::identity_matrix(s));
  in.dense.push_back(oracle::diagonal_matrix(phi) * oracle::shift_difference_matrix(s, 1, 0));
  in.dense.push_back(oracle::diagonal_matrix(phi) * oracle::shift_difference_matrix(s, 0, 1));
  in.state.x = oracle::random_image(s.width, s.height, rng);
  for (std::size_t i = 0; i < in.ops.size(); ++i) {
    in.state.z.push_back(oracle::random_image(s.width, s.height, rng));
    in.state.p.push_back(oracle::random_image(s.width, s.height, rng));
    in.state.rho.push_back(r(rng));
  }
  return in;
}

}  // namespace

TEST_CASE("make_constraint_ops") {
  std::mt19937_64 rng(40);
  const GrayImage x = oracle::random_image(7, 6, rng);
  SUBCASE("block counts") {
    CHECK(make_constraint_ops(1, GrayImage(7, 6, 1.0)).size() == 3);
    CHECK(make_constraint_ops(4, GrayImage(7, 6, 1.0)).size() == 6);
    CHECK(make_constraint_ops(2, x.shape(), nltv_weights(x, 3, 3, 1.0)).size() == 10);
  }
  SUBCASE("all-ones map is plain forward differences") {
    const auto ops = make_constraint_ops(1, GrayImage(7, 6, 1.0));
    const Gradient g = gradient_forward(x);
    CHECK(max_abs_diff(ops[1].apply(x), g.gx) == 0.0);
    CHECK(max_abs_diff(ops[2].apply(x), g.gy) == 0.0);
  }
  SUBCASE("random map against an elementwise loop") {
    const GrayImage phi = oracle::random_image(7, 6, rng, 0.0, 1.0);
    const auto ops = make_constraint_ops(2, phi);
    const GrayImage tx = ops[2].apply(x);
    const GrayImage ty = ops[3].apply(x);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 7; ++j) {
        CHECK(tx(i, j) == doctest::Approx(phi(i, j) * (x.clamped(i, j + 1) - x(i, j))));
        CHECK(ty(i, j) == doctest::Approx(phi(i, j) * (x.clamped(i + 1, j) - x(i, j))));
      }
    for (const auto& op : ops) {
      const GrayImage u = oracle::random_image(7, 6, rng);
      const GrayImage v = oracle::random_image(7, 6, rng);
      CHECK(std::abs(dot(op.apply(u), v) - dot(u, op.adjoint(v))) <= 1e-10 * norm(u) * norm(v));
    }
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(make_constraint_ops(1, x.shape(), nltv_weights(GrayImage(3, 3), 3, 3, 1.0)),
                    InvalidArgument);
  }
}

TEST_CASE("x_update") {
  std::mt19937_64 rng(41);
  SolverConfig cfg;
  cfg.cg_iters = 500;
  cfg.cg_tol = 1e-13;
  SUBCASE("single identity block") {
    AdmmState st;
    st.x = GrayImage(4, 4);
    st.z = {oracle::random_image(4, 4, rng)};
    st.p = {GrayImage(4, 4)};
    st.rho = {1.0};
    const std::vector<LinearOp> ops{LinearOp::identity({4, 4})};
    CHECK(max_abs_diff(x_update(st, ops, cfg).x, st.z[0]) <= 1e-12);
  }
  SUBCASE("two identity blocks average") {
    AdmmState st;
    st.x = GrayImage(4, 4);
    st.z = {oracle::random_image(4, 4, rng), oracle::random_image(4, 4, rng)};
    st.p = {GrayImage(4, 4), GrayImage(4, 4)};
    st.rho = {2.0, 2.0};
    const std::vector<LinearOp> ops(2, LinearOp::identity({4, 4}));
    CHECK(max_abs_diff(x_update(st, ops, cfg).x, (st.z[0] + st.z[1]) * 0.5) <= 1e-12);
  }
  SUBCASE("dense solve on instances up to 10x10") {
    for (int trial = 0; trial < 12; ++trial) {
      const Shape s{2 + static_cast<int>(rng() % 9), 2 + static_cast<int>(rng() % 9)};
      Instance in = random_instance(s, 1 + rng() % 3, rng);
      const Eigen::Index n = static_cast<Eigen::Index>(s.pixels());
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
      Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
      for (std::size_t i = 0; i < in.ops.size(); ++i) {
        const double rho = in.state.rho[i];
        a += rho * in.dense[i].transpose() * in.dense[i];
        b += in.dense[i].transpose() * (rho * oracle::vec(in.state.z[i]) - oracle::vec(in.state.p[i]));
      }
      const Eigen::VectorXd ref = a.ldlt().solve(b);
      const CgReport rep = x_update(in.state, in.ops, cfg);
      CHECK((oracle::vec(rep.x) - ref).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("z_data_update") {
  std::mt19937_64 rng(42);
  SolverConfig cfg;
  cfg.scg_iters = 200;
  cfg.scg_tol = 1e-12;
  SUBCASE("Gaussian limit has the weighted-average closed form") {
    const GrayImage y = oracle::random_image(6, 5, rng, 50.0, 150.0);
    const FrameModel f = identity_frame(y, NoiseParams{0.0, 0.0, 3.0, {}});
    const GrayImage tx = oracle::random_image(6, 5, rng, 50.0, 150.0);
    const GrayImage p = oracle::random_image(6, 5, rng, -1.0, 1.0);
    const double rho = 0.2;
    const ScgReport rep = z_data_update(f, tx, p, rho, tx, cfg);
    const double w = 1.0 / 9.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double v = tx[k] + p[k] / rho;
      CHECK(rep.z[k] == doctest::Approx((w * y[k] + rho * v) / (w + rho)).epsilon(1e-6));
    }
  }
  SUBCASE("huge penalty returns the proximal centre") {
    const GrayImage y = oracle::random_image(6, 5, rng, 50.0, 150.0);
    const FrameModel f = identity_frame(y, NoiseParams{1.0, 0.0, 2.0, {}});
    const GrayImage tx = oracle::random_image(6, 5, rng, 50.0, 150.0);
    const GrayImage p = oracle::random_image(6, 5, rng, -1.0, 1.0);
    const ScgReport rep = z_data_update(f, tx, p, 1e12, y, cfg);
    for (std::size_t k = 0; k < y.size(); ++k) CHECK(std::abs(rep.z[k] - tx[k]) <= 1e-4 * std::abs(tx[k]));
  }
  SUBCASE("objective never exceeds the warm start") {
    SolverConfig short_cfg;
    for (int trial = 0; trial < 100; ++trial) {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      const Shape hr{8, 8};
      const LinearOp op = (trial % 2) ? LinearOp::identity(hr)
                                      : make_system_op(hr, {u(rng), u(rng)}, gaussian_kernel(1.0, 1), 2);
      const Shape lr = op.out_shape();
      const FrameModel f{oracle::random_image(lr.width, lr.height, rng, 20.0, 200.0), op,
                         NoiseParams{0.05 + u(rng), 0.0, 0.5 + 3.0 * u(rng), {}}};
      const GrayImage tx = oracle::random_image(8, 8, rng, 20.0, 200.0);
      const GrayImage p = oracle::random_image(8, 8, rng, -2.0, 2.0);
      const GrayImage warm = oracle::random_image(8, 8, rng, 20.0, 200.0);
      const double rho = std::pow(10.0, -3.0 + 5.0 * u(rng));
      const ScgReport rep = z_data_update(f, tx, p, rho, warm, short_cfg);
      CHECK(rep.objective <= rep.warm_objective);
    }
  }
}

TEST_CASE("z_reg_update and soft threshold") {
  CHECK(soft_threshold(0.5, 1.0) == 0.0);
  CHECK(soft_threshold(2.0, 1.0) == 1.0);
  CHECK(soft_threshold(-2.0, 1.0) == -1.0);
  CHECK(soft_threshold(1.0, 1.0) == 0.0);

  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> vd(-10.0, 10.0);
  std::uniform_real_distribution<double> td(0.0, 5.0);
  for (int k = 0; k < 2000; ++k) {
    const double v = vd(rng);
    const double t = td(rng);
    CHECK(std::abs(soft_threshold(v, t) - oracle::brute_prox(v, t)) <= 1e-6);
  }

  const GrayImage tx(3, 2, 1.0);
  const GrayImage p(3, 2, 2.0);
  // v = 1 + 2/4 = 1.5, threshold 2/4 = 0.5.
  const GrayImage z = z_reg_update(tx, p, 4.0, 2.0);
  for (double v : z.data()) CHECK(v == doctest::Approx(1.0));
  CHECK_THROWS_AS(z_reg_update(tx, p, 0.0, 1.0), InvalidArgument);
}

TEST_CASE("dual_update") {
  std::mt19937_64 rng(44);
  const GrayImage p = oracle::random_image(4, 3, rng);
  const GrayImage tx = oracle::random_image(4, 3, rng);
  CHECK(max_abs_diff(dual_update(p, tx, tx, 3.0), p) == 0.0);
  const GrayImage one = dual_update(GrayImage(4, 3), GrayImage(4, 3, 1.0), GrayImage(4, 3), 2.0);
  for (double v : one.data()) CHECK(v == 2.0);
  const GrayImage a = oracle::random_image(4, 3, rng);
  const GrayImage b = oracle::random_image(4, 3, rng);
  const GrayImage z(4, 3);
  const GrayImage lhs = dual_update(p, a * 2.0 - b * 3.0, z, 1.7) - p;
  const GrayImage rhs = (dual_update(p, a, z, 1.7) - p) * 2.0 - (dual_update(p, b, z, 1.7) - p) * 3.0;
  CHECK(max_abs_diff(lhs, rhs) <= 1e-12);
}

TEST_CASE("penalty_update") {
  SolverConfig cfg;
  CHECK(penalty_update(1.0, 11.0, 1.0, cfg) == 2.0);
  CHECK(penalty_update(1.0, 1.0, 11.0, cfg) == 0.5);
  CHECK(penalty_update(1.0, 3.0, 3.0, cfg) == 1.0);
  CHECK(penalty_update(1.0, 10.0, 1.0, cfg) == 1.0);
  CHECK(penalty_update(1.0, 1.0, 10.0, cfg) == 1.0);
  CHECK(penalty_update(0.25, 0.0, 0.0, cfg) == 0.25);
}

TEST_CASE("residuals") {
  std::mt19937_64 rng(45);
  Instance in = random_instance({5, 6}, 2, rng);
  std::vector<GrayImage> z_new;
  for (std::size_t i = 0; i < in.ops.size(); ++i) z_new.push_back(oracle::random_image(6, 5, rng));
  const BlockResiduals res = residuals(in.ops, in.state.x, z_new, in.state.z, in.state.rho);
  for (std::size_t i = 0; i < in.ops.size(); ++i) {
    const Eigen::VectorXd r = in.dense[i] * oracle::vec(in.state.x) - oracle::vec(z_new[i]);
    const Eigen::VectorXd s =
        -in.state.rho[i] * in.dense[i].transpose() * (oracle::vec(z_new[i]) - oracle::vec(in.state.z[i]));
    CHECK((oracle::vec(res.r[i]) - r).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((oracle::vec(res.s[i]) - s).cwiseAbs().maxCoeff() <= 1e-12);
  }
  std::vector<GrayImage> tx;
  for (const auto& op : in.ops) tx.push_back(op.apply(in.state.x));
  const BlockResiduals zero = residuals(in.ops, in.state.x, tx, tx, in.state.rho);
  for (std::size_t i = 0; i < in.ops.size(); ++i) {
    CHECK(squared_norm(zero.r[i]) == 0.0);
    CHECK(squared_norm(zero.s[i]) == 0.0);
  }
}

TEST_CASE("solve") {
  SUBCASE("unregularized noiseless identity converges to the observation") {
    std::mt19937_64 rng(46);
    const GrayImage y = oracle::random_image(16, 16, rng, 10.0, 100.0);
    const std::vector<FrameModel> frames{identity_frame(y, NoiseParams{0.0, 0.0, 0.0, {}})};
    SolverConfig cfg;
    cfg.lambda = 0.0;
    cfg.max_iter = 15;
    cfg.early_stop = false;
    cfg.cg_iters = cfg.scg_iters = 500;
    cfg.cg_tol = cfg.scg_tol = 1e-14;
    for (auto reg : {RegularizerKind::tv, RegularizerKind::bswtv}) {
      cfg.regularizer = reg;
      const SolveResult res = solve(frames, cfg, initial_guess(frames));
      CHECK(max_abs_diff(res.x, y) <= 1e-6);
    }
  }
  SUBCASE("flat-field denoising reduces variance tenfold") {
    const GrayImage flat(32, 32, 100.0);
    const GrayImage y = add_mpg_noise(flat, NoiseParams{1.0, 0.0, 10.0, {}}, 7);
    const std::vector<FrameModel> frames{identity_frame(y, NoiseParams{1.0, 0.0, 10.0, {}})};
    SolverConfig cfg;
    cfg.max_iter = 50;
    const SolveResult res = solve(frames, cfg, initial_guess(frames));
    CHECK(variance(res.x) * 10.0 <= variance(y));
  }
  SUBCASE("block structure, logs and determinism") {
    const GrayImage gt = shapes_image(32);
    const auto frames = make_lr_frames(gt, half_pixel_offsets(), gaussian_kernel(1.0, 1), 2,
                                       NoiseParams{1.0, 0.0, 2.0, {}}, 3);
    SolverConfig cfg;
    cfg.max_iter = 6;
    cfg.early_stop = false;
    std::vector<std::size_t> counts;
    const SolveResult a = solve(frames, cfg, initial_guess(frames),
                                [&](const IterationRecord&, const AdmmState& st) {
                                  counts.push_back(st.block_count());
                                  for (double r : st.rho) CHECK(r > 0.0);
                                });
    CHECK(counts == std::vector<std::size_t>(6, frames.size() + 2));
    CHECK(a.state.log.size() == 6);
    CHECK(a.state.objective_trace.size() == 6);
    CHECK(a.state.log.back().r_norm.size() == frames.size() + 2);
    const SolveResult b = solve(frames, cfg, initial_guess(frames));
    CHECK(a.x.values() == b.x.values());

    cfg.regularizer = RegularizerKind::nltv;
    cfg.max_iter = 2;
    const SolveResult n = solve(frames, cfg, initial_guess(frames));
    CHECK(n.state.block_count() == frames.size() + 8);
  }
  SUBCASE("primal residual is non-increasing with a frozen map") {
    const GrayImage gt = shapes_image(32);
    const auto frames = make_lr_frames(gt, {{0.0, 0.0}}, std::nullopt, 1, NoiseParams{0.0, 0.0, 5.0, {}}, 4);
    SolverConfig cfg;
    cfg.regularizer = RegularizerKind::tv;
    cfg.adapt_rho = false;
    cfg.early_stop = false;
    cfg.rho0 = 0.05;
    cfg.lambda = 0.02;
    cfg.max_iter = 60;
    cfg.cg_tol = 1e-12;
    cfg.cg_iters = 400;
    cfg.scg_tol = 1e-12;
    cfg.scg_iters = 100;
    const SolveResult res = solve(frames, cfg, initial_guess(frames));
    const auto& log = res.state.log;
    const std::size_t start = log.size() / 5;
    for (std::size_t k = start + 1; k < log.size(); ++k) {
      CHECK(log[k].sum_r2 <= log[k - 1].sum_r2 + 1e-8);
    }
  }
  SUBCASE("early stop fires on a converged instance") {
    const GrayImage flat(16, 16, 50.0);
    const std::vector<FrameModel> frames{identity_frame(flat, NoiseParams{1.0, 0.0, 1.0, {}})};
    SolverConfig cfg;
    cfg.max_iter = 100;
    const SolveResult res = solve(frames, cfg, initial_guess(frames));
    CHECK(res.state.stopped_early);
    CHECK(res.state.log.size() < 100);
  }
  SUBCASE("argument errors") {
    const std::vector<FrameModel> frames{identity_frame(GrayImage(8, 8, 1.0), NoiseParams{0.0, 0.0, 1.0, {}})};
    SolverConfig cfg;
    CHECK_THROWS_AS(solve({}, cfg, GrayImage(8, 8)), InvalidArgument);
    CHECK_THROWS_AS(solve(frames, cfg, GrayImage(4, 8)), InvalidArgument);
    cfg.rho0 = 0.0;
    CHECK_THROWS_AS(solve(frames, cfg, GrayImage(8, 8)), InvalidArgument);
  }
  SUBCASE("a start outside the noise model domain is reported") {
    // alpha*Az + sigma^2 < 0 on every pixel for a negative start without read noise.
    const std::vector<FrameModel> frames{identity_frame(GrayImage(8, 8, 5.0), NoiseParams{1.0, 0.0, 0.0, {}})};
    SolverConfig cfg;
    cfg.max_iter = 2;
    CHECK_THROWS_AS(solve(frames, cfg, GrayImage(8, 8, -10.0)), DomainError);
  }
}
