#pragma once

// Moller's scaled conjugate gradient: a Hessian-free nonlinear CG that
// replaces the line search with a Levenberg-Marquardt style scale on a
// finite-difference curvature estimate. Only steps that do not increase the
// objective are accepted.

#include <functional>

#include "bswtv/image.hpp"

namespace bswtv {

// Returns f(x) and, when `grad` is non-null, writes the gradient into it.
// May throw DomainError for points outside the objective's domain; such
// trial points are rejected like any other unsuccessful step.
using ScgObjective = std::function<double(const GrayImage& x, GrayImage* grad)>;

struct ScgOptions {
  int max_iter = 20;
  double tol = 1e-6;  // stop when ||grad|| <= tol * ||grad(x0)||
  double sigma0 = 1e-4;
};

struct ScgResult {
  GrayImage x;
  double value = 0.0;
  int iterations = 0;
  int accepted_steps = 0;
  bool converged = false;
  bool stagnated = false;  // no step accepted; x is the warm start
};

ScgResult scaled_conjugate_gradient(const ScgObjective& f, GrayImage x0,
                                    const ScgOptions& options = {});

}  // namespace bswtv
