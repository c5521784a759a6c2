#pragma once

// Data terms. The mixed Poisson-Gaussian term is the Gaussian approximation
//   g(z) = 1/2 * sum_j ( r_j^2 / d_j + log d_j ),
//   u = A z,  d_j = alpha u_j + sigma_j^2,  r_j = y_j - u_j - mu,
// with the additive constant dropped. The L2 term is 1/2 ||y - A z - mu||^2.

#include <span>

#include "bswtv/degrade.hpp"
#include "bswtv/image.hpp"

namespace bswtv {

enum class DataTerm { mpg, l2 };

struct FidelityEval {
  double value = 0.0;
  GrayImage gradient;  // d value / d z, on the frame's input grid
};

// Fraction of pixels that may be clamped at kVarianceFloor before an
// evaluation is rejected as out of domain.
inline constexpr double kMaxClampedFraction = 0.01;

// Per-pixel weights 1 / (alpha [A x]_j + sigma_j^2), on the observation grid.
GrayImage weight_diag(const FrameModel& frame, const GrayImage& x);

// Single-frame data term value.
double frame_nll(const FrameModel& frame, const GrayImage& z, DataTerm term = DataTerm::mpg);

// Multi-frame sum over independent frames. Domain errors name the frame index.
double nll(std::span<const FrameModel> frames, const GrayImage& x,
           DataTerm term = DataTerm::mpg);

// Gradient of frame_nll with respect to z.
GrayImage nll_grad(const FrameModel& frame, const GrayImage& z, DataTerm term = DataTerm::mpg);

// Value and gradient sharing one forward application of A.
FidelityEval evaluate(const FrameModel& frame, const GrayImage& z, DataTerm term = DataTerm::mpg);

}  // namespace bswtv
