#include "bswtv/admm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "bswtv/error.hpp"
#include "bswtv/scg.hpp"

namespace bswtv {

void SolverConfig::validate() const {
  if (!(lambda >= 0.0)) throw InvalidArgument("SolverConfig: lambda must be >= 0");
  if (!(rho0 > 0.0)) throw InvalidArgument("SolverConfig: rho0 must be > 0");
  if (!(c1 > 1.0 && c2 > 1.0 && c > 1.0)) {
    throw InvalidArgument("SolverConfig: c1, c2 and c must all be > 1");
  }
  if (max_iter < 1 || cg_iters < 1 || scg_iters < 1) {
    throw InvalidArgument("SolverConfig: iteration budgets must be >= 1");
  }
  if (!(cg_tol > 0.0) || !(scg_tol > 0.0)) {
    throw InvalidArgument("SolverConfig: tolerances must be > 0");
  }
  if (regularizer == RegularizerKind::bswtv) bswtv.validate();
  if (regularizer == RegularizerKind::nltv) {
    if (nltv.window < 3 || nltv.window % 2 == 0 || nltv.patch < 1 || nltv.patch % 2 == 0) {
      throw InvalidArgument("SolverConfig: NLTV window must be odd >= 3 and patch odd");
    }
    if (!(nltv.eta > 0.0)) throw InvalidArgument("SolverConfig: NLTV eta must be > 0");
  }
}

std::vector<LinearOp> make_constraint_ops(std::size_t m, const GrayImage& phi) {
  const Shape shape = phi.shape();
  std::vector<LinearOp> ops(m, LinearOp::identity(shape));
  const LinearOp weight = LinearOp::diagonal(phi);
  ops.push_back(LinearOp::shift_difference(shape, 1, 0).then(weight));
  ops.push_back(LinearOp::shift_difference(shape, 0, 1).then(weight));
  return ops;
}

std::vector<LinearOp> make_constraint_ops(std::size_t m, Shape shape,
                                          const std::vector<NltvWeight>& maps) {
  std::vector<LinearOp> ops(m, LinearOp::identity(shape));
  for (const NltvWeight& w : maps) {
    if (w.weight.shape() != shape) {
      throw InvalidArgument("make_constraint_ops: NLTV map shape mismatch");
    }
    ops.push_back(
        LinearOp::shift_difference(shape, w.dx, w.dy).then(LinearOp::diagonal(w.weight)));
  }
  return ops;
}

CgReport x_update(const AdmmState& state, std::span<const LinearOp> ops, const SolverConfig& cfg) {
  if (ops.size() != state.z.size() || ops.size() != state.p.size() ||
      ops.size() != state.rho.size()) {
    throw InvalidArgument("x_update: block count mismatch");
  }
  const Shape shape = state.x.shape();
  auto normal = [&](const GrayImage& v) {
    GrayImage out(shape);
    for (std::size_t i = 0; i < ops.size(); ++i) {
      out.axpy(state.rho[i], ops[i].adjoint(ops[i].apply(v)));
    }
    return out;
  };

  GrayImage b(shape);
  for (std::size_t i = 0; i < ops.size(); ++i) {
    GrayImage t = state.z[i] * state.rho[i];
    t -= state.p[i];
    b += ops[i].adjoint(t);
  }
  const double b_norm = norm(b);
  CgReport rep{state.x, 0, 0.0};
  if (b_norm == 0.0) {
    rep.x = GrayImage(shape);
    return rep;
  }

  GrayImage r = b - normal(rep.x);
  GrayImage d = r;
  double rr = squared_norm(r);
  for (int it = 0; it < cfg.cg_iters; ++it) {
    if (std::sqrt(rr) <= cfg.cg_tol * b_norm) break;
    const GrayImage ad = normal(d);
    const double curvature = dot(d, ad);
    if (!(curvature > 0.0)) {
      throw SolverError("x_update: CG breakdown at iteration " + std::to_string(it) +
                        " (d^T A d = " + std::to_string(curvature) +
                        ", ||r|| = " + std::to_string(std::sqrt(rr)) + ")");
    }
    const double step = rr / curvature;
    rep.x.axpy(step, d);
    r.axpy(-step, ad);
    const double rr_new = squared_norm(r);
    d *= rr_new / rr;
    d += r;
    rr = rr_new;
    rep.iterations = it + 1;
  }
  rep.residual_norm = std::sqrt(rr);
  return rep;
}

ScgReport z_data_update(const FrameModel& frame, const GrayImage& tx, const GrayImage& p,
                        double rho, const GrayImage& warm, const SolverConfig& cfg) {
  require_same_shape(tx, p, "z_data_update");
  require_same_shape(tx, warm, "z_data_update");
  GrayImage v = p * (1.0 / rho);
  v += tx;
  const DataTerm term = cfg.data_term;
  ScgObjective f = [&](const GrayImage& z, GrayImage* grad) {
    FidelityEval e = evaluate(frame, z, term);
    GrayImage diff = z - v;
    if (grad) {
      *grad = std::move(e.gradient);
      grad->axpy(rho, diff);
    }
    return e.value + 0.5 * rho * squared_norm(diff);
  };

  GrayImage start = warm;
  double warm_value = 0.0;
  try {
    warm_value = f(start, nullptr);
  } catch (const DomainError&) {
    // The proximal centre is the natural fallback when the previous block
    // iterate left the domain.
    start = v;
    warm_value = f(start, nullptr);
  }

  ScgOptions opts;
  opts.max_iter = cfg.scg_iters;
  opts.tol = cfg.scg_tol;
  ScgResult res = scaled_conjugate_gradient(f, std::move(start), opts);
  return ScgReport{std::move(res.x), res.value, warm_value, res.iterations, res.stagnated};
}

double soft_threshold(double v, double threshold) {
  if (v >= threshold) return v - threshold;
  if (v <= -threshold) return v + threshold;
  return 0.0;
}

GrayImage z_reg_update(const GrayImage& tx, const GrayImage& p, double rho, double lambda) {
  require_same_shape(tx, p, "z_reg_update");
  if (!(rho > 0.0)) throw InvalidArgument("z_reg_update: rho must be > 0");
  const double t = lambda / rho;
  GrayImage out(tx.shape());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = soft_threshold(tx[k] + p[k] / rho, t);
  return out;
}

GrayImage dual_update(const GrayImage& p, const GrayImage& tx, const GrayImage& z, double rho) {
  GrayImage out = tx - z;
  out *= rho;
  out += p;
  return out;
}

double penalty_update(double rho, double r_norm, double s_norm, const SolverConfig& cfg) {
  if (r_norm > cfg.c * s_norm) return cfg.c1 * rho;
  if (s_norm > cfg.c * r_norm) return rho / cfg.c2;
  return rho;
}

BlockResiduals residuals(std::span<const LinearOp> ops, const GrayImage& x_new,
                         std::span<const GrayImage> z_new, std::span<const GrayImage> z_old,
                         std::span<const double> rho) {
  if (z_new.size() != ops.size() || z_old.size() != ops.size() || rho.size() != ops.size()) {
    throw InvalidArgument("residuals: block count mismatch");
  }
  BlockResiduals out;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    out.r.push_back(ops[i].apply(x_new) - z_new[i]);
    out.s.push_back(ops[i].adjoint(z_new[i] - z_old[i]) * -rho[i]);
  }
  return out;
}

GrayImage initial_guess(std::span<const FrameModel> frames) {
  if (frames.empty()) throw InvalidArgument("initial_guess: no frames");
  const FrameModel& f = frames.front();
  const Shape hr = f.op.in_shape();
  const Shape lr = f.observation.shape();
  if (hr == lr) return f.observation;
  if (hr.width % lr.width != 0 || hr.width / lr.width != hr.height / lr.height ||
      hr.height % lr.height != 0) {
    throw InvalidArgument("initial_guess: HR/LR shapes are not an integer upscale");
  }
  return bicubic_upscale(f.observation, hr.width / lr.width);
}

double objective(std::span<const FrameModel> frames, const GrayImage& x,
                 std::span<const LinearOp> ops, double lambda, DataTerm term) {
  double value = nll(frames, x, term);
  for (std::size_t i = frames.size(); i < ops.size(); ++i) {
    const GrayImage t = ops[i].apply(x);
    double l1 = 0.0;
    for (double v : t.data()) l1 += std::abs(v);
    value += lambda * l1;
  }
  return value;
}

namespace {

std::vector<LinearOp> regularized_ops(std::span<const FrameModel> frames, const SolverConfig& cfg,
                                      AdmmState& state) {
  const std::size_t m = frames.size();
  const Shape shape = state.x.shape();
  switch (cfg.regularizer) {
    case RegularizerKind::bswtv:
      state.weights = update_weighting_map(state.weights, state.x, cfg.bswtv);
      return make_constraint_ops(m, state.weights.phi);
    case RegularizerKind::tv:
      return make_constraint_ops(m, GrayImage(shape, 1.0));
    case RegularizerKind::nltv:
      return make_constraint_ops(
          m, shape, nltv_weights(state.x, cfg.nltv.window, cfg.nltv.patch, cfg.nltv.eta));
  }
  throw InvalidArgument("solve: unknown regularizer");
}

}  // namespace

SolveResult solve(std::span<const FrameModel> frames, const SolverConfig& cfg,
                  const GrayImage& init, const IterationObserver& observer) {
  cfg.validate();
  if (frames.empty()) throw InvalidArgument("solve: at least one frame is required");
  const Shape hr = frames.front().op.in_shape();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    frames[i].validate();
    if (frames[i].op.in_shape() != hr) {
      throw InvalidArgument("solve: frame " + std::to_string(i) +
                            " operator expects a different HR shape");
    }
  }
  if (init.shape() != hr) throw InvalidArgument("solve: init shape does not match HR shape");

  const std::size_t m = frames.size();
  const std::size_t reg_blocks =
      cfg.regularizer == RegularizerKind::nltv
          ? static_cast<std::size_t>(cfg.nltv.window * cfg.nltv.window - 1)
          : 2;
  const std::size_t blocks = m + reg_blocks;

  AdmmState st;
  st.data_blocks = static_cast<int>(m);
  st.x = cfg.phi_from_init ? init : GrayImage(hr);
  st.weights = WeightState::initial(hr, cfg.bswtv);
  for (std::size_t i = 0; i < blocks; ++i) {
    st.z.push_back(i < m ? init : GrayImage(hr));
    st.p.emplace_back(hr);
  }
  st.rho.assign(blocks, cfg.rho0);
  st.primal_res.assign(blocks, 0.0);
  st.dual_res.assign(blocks, 0.0);

  const auto t_start = std::chrono::steady_clock::now();
  double prev_r2 = std::numeric_limits<double>::quiet_NaN();
  double prev_s2 = std::numeric_limits<double>::quiet_NaN();

  for (int k = 0; k < cfg.max_iter; ++k) {
    try {
      const std::vector<LinearOp> ops = regularized_ops(frames, cfg, st);

      st.x = x_update(st, ops, cfg).x;

      IterationRecord rec;
      rec.iter = k + 1;
      std::vector<double> next_rho(blocks);
      for (std::size_t i = 0; i < blocks; ++i) {
        const GrayImage tx = ops[i].apply(st.x);
        GrayImage z_new = i < m ? z_data_update(frames[i], tx, st.p[i], st.rho[i], st.z[i], cfg).z
                                : z_reg_update(tx, st.p[i], st.rho[i], cfg.lambda);
        const double r = norm(tx - z_new);
        const double s = st.rho[i] * norm(ops[i].adjoint(z_new - st.z[i]));
        next_rho[i] = cfg.adapt_rho ? penalty_update(st.rho[i], r, s, cfg) : st.rho[i];
        st.p[i] = dual_update(st.p[i], tx, z_new, st.rho[i]);
        st.z[i] = std::move(z_new);
        st.primal_res[i] = r;
        st.dual_res[i] = s;
        rec.sum_r2 += r * r;
        rec.sum_s2 += s * s;
      }
      st.rho = next_rho;

      try {
        rec.objective = objective(frames, st.x, ops, cfg.lambda, cfg.data_term);
      } catch (const DomainError&) {
        rec.objective = std::numeric_limits<double>::quiet_NaN();
      }
      rec.rho_min = *std::min_element(st.rho.begin(), st.rho.end());
      rec.rho_max = *std::max_element(st.rho.begin(), st.rho.end());
      rec.r_norm = st.primal_res;
      rec.s_norm = st.dual_res;
      rec.rho = st.rho;
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                             t_start)
                        .count();
      st.objective_trace.push_back(rec.objective);
      st.log.push_back(rec);
      if (observer) observer(rec, st);

      if (cfg.early_stop && k > 0) {
        auto rel_decrease = [](double prev, double cur) {
          if (prev > 0.0) return (prev - cur) / prev;
          return cur > 0.0 ? -std::numeric_limits<double>::infinity() : 0.0;
        };
        if (rel_decrease(prev_r2, rec.sum_r2) < cfg.eps1 &&
            rel_decrease(prev_s2, rec.sum_s2) < cfg.eps2) {
          st.stopped_early = k + 1 < cfg.max_iter;
          break;
        }
      }
      prev_r2 = rec.sum_r2;
      prev_s2 = rec.sum_s2;
    } catch (const DomainError& e) {
      throw DomainError("ADMM iteration " + std::to_string(k + 1) + ": " + e.what());
    } catch (const SolverError& e) {
      throw SolverError("ADMM iteration " + std::to_string(k + 1) + ": " + e.what());
    }
  }
  return SolveResult{st.x, std::move(st)};
}

}  // namespace bswtv
