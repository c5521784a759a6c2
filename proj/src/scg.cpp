#include "bswtv/scg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bswtv/error.hpp"

namespace bswtv {

ScgResult scaled_conjugate_gradient(const ScgObjective& f, GrayImage x0,
                                    const ScgOptions& options) {
  constexpr double kScaleMin = 1e-15;
  constexpr double kScaleMax = 1e100;

  ScgResult res;
  res.x = std::move(x0);
  GrayImage grad(res.x.shape());
  res.value = f(res.x, &grad);  // warm start must be feasible
  const double grad0 = norm(grad);
  if (grad0 == 0.0) {
    res.converged = true;
    return res;
  }
  const double n_params = static_cast<double>(res.x.size());

  GrayImage dir = grad * -1.0;
  GrayImage grad_plus(res.x.shape());
  double scale = 1.0;
  double mu = 0.0;
  double kappa = 0.0;
  double theta = 0.0;
  bool success = true;
  int since_restart = 0;

  for (int it = 0; it < options.max_iter; ++it) {
    res.iterations = it + 1;
    if (success) {
      mu = dot(dir, grad);
      if (mu >= 0.0) {
        dir = grad * -1.0;
        mu = dot(dir, grad);
      }
      kappa = squared_norm(dir);
      if (kappa < std::numeric_limits<double>::epsilon()) {
        res.converged = true;
        break;
      }
      const double step = options.sigma0 / std::sqrt(kappa);
      GrayImage probe = res.x;
      probe.axpy(step, dir);
      try {
        f(probe, &grad_plus);
        theta = dot(dir, grad_plus - grad) / step;
      } catch (const DomainError&) {
        theta = 0.0;
      }
    }

    double delta = theta + scale * kappa;
    if (delta <= 0.0) {
      delta = scale * kappa;
      scale -= theta / kappa;
    }
    const double alpha = -mu / delta;

    GrayImage trial = res.x;
    trial.axpy(alpha, dir);
    double f_trial = std::numeric_limits<double>::infinity();
    GrayImage grad_trial(res.x.shape());
    bool feasible = true;
    try {
      f_trial = f(trial, &grad_trial);
    } catch (const DomainError&) {
      feasible = false;
    }
    const double comparison =
        feasible ? 2.0 * (f_trial - res.value) / (alpha * mu) : -1.0;
    success = feasible && comparison >= 0.0 && f_trial <= res.value;

    GrayImage grad_old;
    if (success) {
      res.x = std::move(trial);
      res.value = f_trial;
      grad_old = std::move(grad);
      grad = std::move(grad_trial);
      ++res.accepted_steps;
      ++since_restart;
      if (norm(grad) <= options.tol * grad0) {
        res.converged = true;
        break;
      }
    }

    if (comparison < 0.25) scale = std::min(4.0 * scale, kScaleMax);
    if (comparison > 0.75) scale = std::max(0.5 * scale, kScaleMin);
    if (scale >= kScaleMax) break;

    if (since_restart >= n_params) {
      dir = grad * -1.0;
      since_restart = 0;
    } else if (success) {
      const double beta = dot(grad_old - grad, grad) / mu;
      dir *= beta;
      dir -= grad;
    }
  }
  res.stagnated = res.accepted_steps == 0 && !res.converged;
  return res;
}

}  // namespace bswtv
