// Acceptance suite: runs every criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion. Exit status is nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bswtv/admm.hpp"
#include "bswtv/experiment.hpp"
#include "bswtv/fidelity.hpp"
#include "bswtv/metrics.hpp"
#include "bswtv/synthetic.hpp"
#include "oracles.hpp"

using namespace bswtv;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Synthetic SR protocol: 64x64 shapes target at peak 200, four half-pixel
// frames, 3x3 Gaussian blur, 2x decimation, alpha = 1, sigma = 2.
std::vector<FrameModel> sr_frames(std::uint64_t seed) {
  return make_lr_frames(shapes_image(64), half_pixel_offsets(), gaussian_kernel(1.0, 1), 2,
                        NoiseParams{1.0, 0.0, 2.0, {}}, seed);
}

SolverConfig sr_config(RegularizerKind reg, double lambda) {
  SolverConfig cfg;
  cfg.regularizer = reg;
  cfg.lambda = lambda;
  cfg.max_iter = 200;
  cfg.early_stop = false;
  if (reg == RegularizerKind::nltv) {
    cfg.data_term = DataTerm::l2;
    cfg.rho0 = 0.01;
  }
  return cfg;
}

double final_psnr(const std::vector<FrameModel>& frames, const SolverConfig& cfg) {
  return psnr(shapes_image(64), solve(frames, cfg, initial_guess(frames)).x);
}

constexpr int kSeeds = 5;
const std::vector<double> kBswtvLambdas{0.05, 0.07, 0.1, 0.14, 0.2};
const std::vector<double> kNltvLambdas{0.35, 0.5, 0.7, 1.0, 1.4};

// PSNR per seed of MPG+BSWTV at the default gamma, shared by criteria 7 and 8,
// with the seconds spent computing it so both runtimes stay honest.
struct CachedRuns {
  std::vector<double> psnr;
  double seconds = 0.0;
};
std::map<double, CachedRuns> bswtv_cache;

const CachedRuns& bswtv_runs(double lambda) {
  auto it = bswtv_cache.find(lambda);
  if (it != bswtv_cache.end()) return it->second;
  const auto t0 = std::chrono::steady_clock::now();
  CachedRuns out;
  for (int s = 1; s <= kSeeds; ++s)
    out.psnr.push_back(final_psnr(sr_frames(s), sr_config(RegularizerKind::bswtv, lambda)));
  out.seconds = seconds_since(t0);
  return bswtv_cache.emplace(lambda, std::move(out)).first->second;
}

double average(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

Verdict proposition1() {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 1002;
  const GrayImage y = add_mpg_noise(GrayImage(n, n, 100.0), NoiseParams{1.0, 0.0, 2.0, {}}, 2024);
  const Gradient g = gradient_central(y);
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  double count = 0;
  for (int i = 1; i < n - 1; ++i)
    for (int j = 1; j < n - 1; ++j) {
      const double a = g.gx(i, j);
      const double b = g.gy(i, j);
      sx += a;
      sy += b;
      sxx += a * a;
      syy += b * b;
      sxy += a * b;
      count += 1;
    }
  const double mx = sx / count;
  const double my = sy / count;
  const double vx = (sxx - count * mx * mx) / (count - 1);
  const double vy = (syy - count * my * my) / (count - 1);
  const double corr = (sxy / count - mx * my) / std::sqrt(vx * vy);
  const double target = (1.0 * 100.0 + 4.0) / 2.0;
  const double secs = seconds_since(t0);
  const bool ok = count >= 1e6 && std::abs(vx - target) <= 0.05 * target &&
                  std::abs(vy - target) <= 0.05 * target && std::abs(mx) < 3.0 * std::sqrt(vx / count) &&
                  std::abs(my) < 3.0 * std::sqrt(vy / count) && std::abs(corr) < 0.01 && secs < 30.0;
  return {ok, fmt("var_x %.3f var_y %.3f (target 52)", vx, vy) + fmt(", corr %.5f, %.1f s", corr, secs)};
}

struct Chain {
  LinearOp op;
  Eigen::MatrixXd dense;
};

Chain random_chain(Shape s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> frac(-1.5, 1.5);
  std::uniform_real_distribution<double> sig(0.4, 1.5);
  std::vector<LinearOp> stages;
  Eigen::MatrixXd dense = oracle::identity_matrix(s);
  const int len = 1 + static_cast<int>(rng() % 4);
  for (int k = 0; k < len; ++k) {
    Eigen::MatrixXd m;
    switch (rng() % 6) {
      case 0:
        stages.push_back(LinearOp::identity(s));
        m = oracle::identity_matrix(s);
        break;
      case 1: {
        const double dx = frac(rng);
        const double dy = frac(rng);
        stages.push_back(LinearOp::subpixel_shift(s, dx, dy));
        m = oracle::shift_matrix(s, dx, dy);
        break;
      }
      case 2: {
        const Kernel2D kern = gaussian_kernel(sig(rng), 1);
        stages.push_back(LinearOp::blur(s, kern));
        m = oracle::blur_matrix(s, kern);
        break;
      }
      case 3:
        if (s.height % 2 == 0 && s.width % 2 == 0) {
          stages.push_back(LinearOp::downsample(s, 2));
          m = oracle::downsample_matrix(s, 2);
        } else {
          stages.push_back(LinearOp::identity(s));
          m = oracle::identity_matrix(s);
        }
        break;
      case 4: {
        const GrayImage w = oracle::random_image(s.width, s.height, rng, 0.0, 2.0);
        stages.push_back(LinearOp::diagonal(w));
        m = oracle::diagonal_matrix(w);
        break;
      }
      default: {
        const int dx = static_cast<int>(rng() % 3) - 1;
        const int dy = static_cast<int>(rng() % 3) - 1;
        stages.push_back(LinearOp::shift_difference(s, dx, dy));
        m = oracle::shift_difference_matrix(s, dx, dy);
        break;
      }
    }
    dense = m * dense;
    s = stages.back().out_shape();
  }
  return {LinearOp::chain(stages), dense};
}

Verdict operators() {
  std::mt19937_64 rng(7);
  double worst_adj = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Shape s{4 * (1 + static_cast<int>(rng() % 4)), 4 * (1 + static_cast<int>(rng() % 4))};
    const Chain c = random_chain(s, rng);
    const GrayImage u = oracle::random_image(s.width, s.height, rng);
    const Shape o = c.op.out_shape();
    const GrayImage v = oracle::random_image(o.width, o.height, rng);
    worst_adj = std::max(worst_adj, std::abs(dot(c.op.apply(u), v) - dot(u, c.op.adjoint(v))) / (norm(u) * norm(v)));
  }
  double worst_dense = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Shape s{2 * (1 + static_cast<int>(rng() % 4)), 2 * (1 + static_cast<int>(rng() % 4))};
    const Chain c = random_chain(s, rng);
    const GrayImage u = oracle::random_image(s.width, s.height, rng);
    const Shape o = c.op.out_shape();
    const GrayImage v = oracle::random_image(o.width, o.height, rng);
    worst_dense = std::max(worst_dense, (oracle::vec(c.op.apply(u)) - c.dense * oracle::vec(u)).cwiseAbs().maxCoeff());
    worst_dense = std::max(worst_dense,
                           (oracle::vec(c.op.adjoint(v)) - c.dense.transpose() * oracle::vec(v)).cwiseAbs().maxCoeff());
  }
  return {worst_adj <= 1e-10 && worst_dense <= 1e-12,
          fmt("adjoint rel err %.2e, dense max err %.2e", worst_adj, worst_dense)};
}

Verdict prox() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> vd(-20.0, 20.0);
  std::uniform_real_distribution<double> ld(0.0, 5.0);
  std::uniform_real_distribution<double> rd(-2.0, 2.0);
  double worst = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const double v = vd(rng);
    const double lambda = ld(rng);
    const double rho = std::pow(10.0, rd(rng));
    const GrayImage z = z_reg_update(GrayImage(1, 1, v), GrayImage(1, 1), rho, lambda);
    worst = std::max(worst, std::abs(z[0] - oracle::brute_prox(v, lambda / rho)));
  }
  return {worst <= 1e-6, fmt("max |prox - brute force| %.2e over 1e5 draws", worst)};
}

Verdict fidelity_gradient() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Shape hr{8, 8};
    const LinearOp op = (t % 2) ? LinearOp::identity(hr)
                                : make_system_op(hr, {u01(rng), u01(rng)}, gaussian_kernel(1.0, 1), 2);
    const Shape lr = op.out_shape();
    const FrameModel f{oracle::random_image(lr.width, lr.height, rng, 20.0, 200.0), op,
                       NoiseParams{0.1 + 1.9 * u01(rng), 4.0 * (u01(rng) - 0.5), 0.5 + 2.5 * u01(rng), {}}};
    const GrayImage z = oracle::random_image(8, 8, rng, 10.0, 150.0);
    const GrayImage g = nll_grad(f, z);
    double gmax = 0.0;
    double err = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      gmax = std::max(gmax, std::abs(g[k]));
      const double h = 1e-5 * std::max(1.0, std::abs(z[k]));
      const double fd = oracle::fd_partial([&](const GrayImage& p) { return frame_nll(f, p); }, z, k, h);
      err = std::max(err, std::abs(fd - g[k]));
    }
    worst = std::max(worst, err / gmax);
  }
  return {worst < 1e-4, fmt("max relative error %.2e over 50 instances", worst)};
}

Verdict cg_dense() {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> rd(0.05, 5.0);
  SolverConfig cfg;
  cfg.cg_iters = 1000;
  cfg.cg_tol = 1e-14;
  double worst = 0.0;
  for (int t = 0; t < 30; ++t) {
    const Shape s{2 + static_cast<int>(rng() % 9), 2 + static_cast<int>(rng() % 9)};
    const std::size_t m = 1 + rng() % 4;
    const GrayImage phi = oracle::random_image(s.width, s.height, rng, 0.05, 1.0);
    const auto ops = make_constraint_ops(m, phi);
    std::vector<Eigen::MatrixXd> dense(m, oracle::identity_matrix(s));
    dense.push_back(oracle::diagonal_matrix(phi) * oracle::shift_difference_matrix(s, 1, 0));
    dense.push_back(oracle::diagonal_matrix(phi) * oracle::shift_difference_matrix(s, 0, 1));
    AdmmState st;
    st.x = oracle::random_image(s.width, s.height, rng);
    const Eigen::Index n = static_cast<Eigen::Index>(s.pixels());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < ops.size(); ++i) {
      st.z.push_back(oracle::random_image(s.width, s.height, rng));
      st.p.push_back(oracle::random_image(s.width, s.height, rng));
      st.rho.push_back(rd(rng));
      a += st.rho[i] * dense[i].transpose() * dense[i];
      b += dense[i].transpose() * (st.rho[i] * oracle::vec(st.z[i]) - oracle::vec(st.p[i]));
    }
    const Eigen::VectorXd ref = a.ldlt().solve(b);
    const GrayImage x = x_update(st, ops, cfg).x;
    worst = std::max(worst, (oracle::vec(x) - ref).cwiseAbs().maxCoeff() / std::max(1.0, ref.cwiseAbs().maxCoeff()));
  }
  return {worst <= 1e-8, fmt("max error vs dense solve %.2e", worst)};
}

Verdict penalty_and_dual() {
  SolverConfig cfg;
  bool ok = penalty_update(1.0, 11.0, 1.0, cfg) == 2.0 && penalty_update(1.0, 1.0, 11.0, cfg) == 0.5 &&
            penalty_update(1.0, 5.0, 5.0, cfg) == 1.0 && penalty_update(3.0, 10.0, 1.0, cfg) == 3.0 &&
            penalty_update(3.0, 0.0, 0.0, cfg) == 3.0;
  std::mt19937_64 rng(11);
  const GrayImage p = oracle::random_image(5, 4, rng);
  const GrayImage tx = oracle::random_image(5, 4, rng);
  const GrayImage fixed = dual_update(p, tx, tx, 7.0);
  ok = ok && fixed.values() == p.values();
  const GrayImage two = dual_update(GrayImage(5, 4), GrayImage(5, 4, 1.0), GrayImage(5, 4), 2.0);
  for (double v : two.data()) ok = ok && v == 2.0;
  return {ok, "double / halve / hold and zero-residual fixed point"};
}

Verdict decay_benefit() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double>& with = bswtv_runs(0.1).psnr;
  std::vector<double> without;
  bool each = true;
  std::string per;
  for (int s = 1; s <= kSeeds; ++s) {
    SolverConfig cfg = sr_config(RegularizerKind::bswtv, 0.1);
    cfg.bswtv.gamma = 1.0;
    without.push_back(final_psnr(sr_frames(s), cfg));
    each = each && with[s - 1] >= without.back() - 0.02;
    per += fmt(" %.2f/%.2f", with[s - 1], without.back());
  }
  const double secs = seconds_since(t0);
  return {each && average(with) > average(without) && secs < 300.0,
          fmt("mean %.3f dB (gamma 0.8) vs %.3f dB (gamma 1), %.0f s;", average(with), average(without), secs) + per};
}

Verdict bswtv_vs_nltv() {
  const auto t0 = std::chrono::steady_clock::now();
  const bool reused = bswtv_cache.count(0.1) > 0;
  const double reused_secs = reused ? bswtv_cache.at(0.1).seconds : 0.0;
  double best_b = -1e9;
  double best_bl = 0.0;
  for (double l : kBswtvLambdas) {
    const double m = average(bswtv_runs(l).psnr);
    if (m > best_b) {
      best_b = m;
      best_bl = l;
    }
  }
  double best_n = -1e9;
  double best_nl = 0.0;
  for (double l : kNltvLambdas) {
    std::vector<double> v;
    for (int s = 1; s <= kSeeds; ++s) v.push_back(final_psnr(sr_frames(s), sr_config(RegularizerKind::nltv, l)));
    if (average(v) > best_n) {
      best_n = average(v);
      best_nl = l;
    }
  }
  const double secs = seconds_since(t0) + reused_secs;
  return {best_b >= best_n + 0.1 && secs < 900.0,
          fmt("MPG+BSWTV %.3f dB (lambda %g)", best_b, best_bl) +
              fmt(" vs L2+NLTV %.3f dB (lambda %g), %.0f s", best_n, best_nl, secs)};
}

Verdict mask_thinning() {
  const GrayImage gt = shapes_image(64);
  const auto frames = make_lr_frames(gt, {{0.0, 0.0}}, std::nullopt, 1, NoiseParams{0.01, 0.0, 10.0, {}}, 1);
  SolverConfig cfg;
  cfg.max_iter = 10;
  cfg.early_stop = false;
  cfg.bswtv.gamma = 0.3;
  cfg.bswtv.beta0 = 0.5;
  cfg.bswtv.eta = 10.0;
  std::vector<double> widths;
  restore(frames, gt, cfg, 255.0, false,
          [&](int, const WeightState& w) { widths.push_back(edge_mask_width(w.phi, gt)); });
  bool mono = true;
  std::string trace;
  for (std::size_t k = 0; k < widths.size(); ++k) {
    if (k > 0) mono = mono && widths[k] <= widths[k - 1];
    trace += fmt(" %.3f", widths[k]);
  }
  return {widths.size() == 10 && mono && widths.back() < widths.front(), "widths" + trace};
}

Verdict denoising_gain() {
  const GrayImage gt = shapes_image(64);
  const auto frames = make_lr_frames(gt, {{0.0, 0.0}}, std::nullopt, 1, NoiseParams{0.01, 0.0, 2.0, {}}, 1);
  SolverConfig cfg;
  cfg.early_stop = false;
  const double noisy = psnr(gt, frames[0].observation);
  const double restored = psnr(gt, solve(frames, cfg, initial_guess(frames)).x);
  return {restored >= noisy + 1.0, fmt("noisy %.3f dB, restored %.3f dB", noisy, restored)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "bswtv_acceptance_replay";
  fs::remove_all(root);
  for (const char* run : {"a", "b"}) {
    DegradeConfig d;
    d.seed = 99;
    d.output_dir = (root / run / "data").string();
    RestoreConfig r;
    r.manifest_path = run_degrade(d);
    r.output_dir = (root / run / "out").string();
    r.solver.max_iter = 20;
    r.timing = false;
    r.dump_phi = true;
    run_restore(r);
  }
  std::size_t files = 0;
  bool same = true;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), root / "a");
    same = same && fs::exists(root / "b" / rel) && slurp(e.path()) == slurp(root / "b" / rel);
    ++files;
  }
  fs::remove_all(root);
  return {same && files > 8, std::to_string(files) + " files compared byte for byte"};
}

Verdict sweeps() {
  const fs::path root = fs::temp_directory_path() / "bswtv_acceptance_sweep";
  fs::remove_all(root);
  DegradeConfig d;
  d.seed = 1;
  d.output_dir = (root / "data").string();
  const std::string manifest = run_degrade(d);

  SweepConfig rho;
  rho.base.manifest_path = manifest;
  rho.base.output_dir = (root / "rho").string();
  rho.base.timing = false;
  rho.base.solver.max_iter = 5;
  rho.base.solver.early_stop = false;
  rho.param = "rho0";
  rho.values = {Json(1e-3), Json(1.0), Json(1e3)};
  const auto rr = run_sweep(rho);
  const double p_small = rr[0].outcome.trace.back().psnr_db;
  const double p_large = rr[2].outcome.trace.back().psnr_db;

  SweepConfig eta = rho;
  eta.base.output_dir = (root / "eta").string();
  eta.base.solver.max_iter = 200;
  eta.param = "eta";
  eta.values = {Json(0.1), Json(15.0), Json(100.0)};
  const auto er = run_sweep(eta);
  const double e_lo = er[0].outcome.quality->psnr_db;
  const double e_mid = er[1].outcome.quality->psnr_db;
  const double e_hi = er[2].outcome.quality->psnr_db;
  fs::remove_all(root);
  return {rr[0].outcome.trace.size() == 5 && p_large < p_small && e_lo < e_mid && e_hi < e_mid,
          fmt("iter-5 PSNR rho0=1e-3 %.3f, rho0=1e3 %.3f;", p_small, p_large) +
              fmt(" final PSNR eta 0.1/15/100: %.3f/%.3f/%.3f", e_lo, e_mid, e_hi)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"1 isotropic white gradients on a flat mixed-noise field", proposition1},
      {"2 operator adjoints and dense matrices", operators},
      {"3 soft-threshold prox exactness", prox},
      {"4 fidelity gradient vs finite differences", fidelity_gradient},
      {"5 CG x-update vs dense solve", cg_dense},
      {"6 penalty rule and dual update tables", penalty_and_dual},
      {"7 decay benefit (gamma 0.8 vs 1)", decay_benefit},
      {"8 MPG+BSWTV vs L2+NLTV", bswtv_vs_nltv},
      {"9 edge-mask thinning", mask_thinning},
      {"10 denoising gain", denoising_gain},
      {"11 determinism and replay", determinism},
      {"12 parameter-sweep shapes", sweeps},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::printf("%s criterion %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
