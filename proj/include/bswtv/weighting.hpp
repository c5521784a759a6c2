#pragma once

// Bilateral spectrum weighting map.
//
// For every pixel the forward-difference gradients of its r x r patch are
// scaled by omega_j = xi_j^{|dx|+|dy|} and collected into a 2 x q matrix G.
// The map value is exp(-|l1 - l2| / eta^2) for the eigenvalues l1, l2 of
// (1/q) G G^T: close to 1 where gradients are isotropic (noise in flat areas)
// and close to 0 on edges. The shrink field xi decays every iteration in
// regions the previous map already considers flat, which thins the edge mask.
//
// The nonlocal TV baseline weights live here as well.

#include <vector>

#include "bswtv/image.hpp"

namespace bswtv {

struct BswtvParams {
  double eta = 15.0;        // smoothing parameter (intensity units)
  double gamma = 0.8;       // decay of xi, sigma_phi and beta
  double beta0 = 0.5;       // initial momentum
  int patch = 3;            // odd patch size r
  double sigma_phi0 = 3.0;  // initial Gaussian width for map smoothing
  double sigma_min = 0.5;   // floor of that width
  double a = 20.0;          // amplitude of f(m) = a (m - b)
  double b = 0.2;           // shift of f

  void validate() const;
};

struct WeightState {
  GrayImage phi;  // values in (0, 1]
  GrayImage xi;   // values in (0, 1]
  double beta = 0.0;
  double sigma_phi = 0.0;
  int iteration = 0;

  // All-pass start: phi = 1, xi = 1.
  static WeightState initial(Shape shape, const BswtvParams& params);
};

// |l1 - l2| of the weighted patch-gradient covariance at every pixel.
GrayImage eigen_gap_map(const GrayImage& x, const GrayImage& xi, int patch);

// exp(-gap / eta^2), floored at the smallest positive double so the map stays in (0, 1].
GrayImage phi_from_gap(const GrayImage& gap, double eta);

// Shrink-field recursion: xi_j *= gamma + (1 - gamma) / (1 + exp(a (mean(phi over N_j) - b))).
GrayImage update_xi(const WeightState& state, const BswtvParams& params);

// One full map update for iteration k, in order: xi decay, raw map from x,
// sigma decay, Gaussian smoothing, beta decay, momentum blend.
WeightState update_weighting_map(const WeightState& state, const GrayImage& x,
                                 const BswtvParams& params);

struct NltvWeight {
  int dx = 0;
  int dy = 0;
  GrayImage weight;
};

// exp(-||N(p) - N(p + D)||^2 / eta^2) for every nonzero shift D in the
// window x window search area; R^2 - 1 maps.
std::vector<NltvWeight> nltv_weights(const GrayImage& x, int window, int patch, double eta);

// Average width of the edge mask: number of pixels with phi < threshold per
// edge pixel of `reference` (pixels with a nonzero forward gradient).
double edge_mask_width(const GrayImage& phi, const GrayImage& reference,
                       double threshold = 0.5);

}  // namespace bswtv
