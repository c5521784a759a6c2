#include "bswtv/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bswtv/error.hpp"

namespace bswtv {

namespace {

void require_odd(int n, const char* what) {
  if (n < 1 || n % 2 == 0) {
    throw InvalidArgument(std::string(what) + " must be odd and positive, got " +
                          std::to_string(n));
  }
}

inline double int_pow(double base, int exp) {
  double out = 1.0;
  for (int k = 0; k < exp; ++k) out *= base;
  return out;
}

}  // namespace

void BswtvParams::validate() const {
  if (patch < 3 || patch % 2 == 0) {
    throw InvalidArgument("BswtvParams: patch must be odd and >= 3");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("BswtvParams: gamma not in [0,1]");
  if (!(beta0 >= 0.0 && beta0 <= 1.0)) throw InvalidArgument("BswtvParams: beta0 not in [0,1]");
  if (!(eta > 0.0)) throw InvalidArgument("BswtvParams: eta must be positive");
  if (!(sigma_min > 0.0) || !(sigma_phi0 >= sigma_min)) {
    throw InvalidArgument("BswtvParams: need sigma_phi0 >= sigma_min > 0");
  }
  if (!(a > 0.0)) throw InvalidArgument("BswtvParams: a must be positive");
  if (!std::isfinite(b)) throw InvalidArgument("BswtvParams: b must be finite");
}

WeightState WeightState::initial(Shape shape, const BswtvParams& params) {
  return WeightState{GrayImage(shape, 1.0), GrayImage(shape, 1.0), params.beta0,
                     params.sigma_phi0, 0};
}

GrayImage eigen_gap_map(const GrayImage& x, const GrayImage& xi, int patch) {
  require_odd(patch, "eigen_gap_map: patch");
  require_same_shape(x, xi, "eigen_gap_map");
  const Gradient g = gradient_forward(x);
  const int h = patch / 2;
  const double inv_q = 1.0 / static_cast<double>(patch * patch);
  GrayImage gap(x.shape());
  for (int i = 0; i < x.height(); ++i) {
    for (int j = 0; j < x.width(); ++j) {
      double sxx = 0.0;
      double sxy = 0.0;
      double syy = 0.0;
      for (int du = -h; du <= h; ++du) {
        for (int dv = -h; dv <= h; ++dv) {
          const double w = int_pow(xi.clamped(i + du, j + dv), std::abs(du) + std::abs(dv));
          const double gx = w * g.gx.clamped(i + du, j + dv);
          const double gy = w * g.gy.clamped(i + du, j + dv);
          sxx += gx * gx;
          sxy += gx * gy;
          syy += gy * gy;
        }
      }
      sxx *= inv_q;
      sxy *= inv_q;
      syy *= inv_q;
      const double diff = sxx - syy;
      gap(i, j) = std::sqrt(diff * diff + 4.0 * sxy * sxy);
    }
  }
  return gap;
}

GrayImage phi_from_gap(const GrayImage& gap, double eta) {
  if (!(eta > 0.0)) throw InvalidArgument("phi_from_gap: eta must be positive");
  const double inv = 1.0 / (eta * eta);
  GrayImage phi(gap.shape());
  for (std::size_t k = 0; k < gap.size(); ++k) {
    phi[k] = std::max(std::exp(-gap[k] * inv), std::numeric_limits<double>::min());
  }
  return phi;
}

GrayImage update_xi(const WeightState& state, const BswtvParams& params) {
  const GrayImage local_mean = box_mean(state.phi, params.patch / 2);
  GrayImage xi = state.xi;
  const double g = params.gamma;
  for (std::size_t k = 0; k < xi.size(); ++k) {
    const double f = params.a * (local_mean[k] - params.b);
    xi[k] *= g + (1.0 - g) / (1.0 + std::exp(f));
  }
  return xi;
}

WeightState update_weighting_map(const WeightState& state, const GrayImage& x,
                                 const BswtvParams& params) {
  params.validate();
  require_same_shape(state.phi, x, "update_weighting_map");
  WeightState next;
  next.iteration = state.iteration + 1;
  next.xi = update_xi(state, params);
  const GrayImage raw = phi_from_gap(eigen_gap_map(x, next.xi, params.patch), params.eta);
  next.sigma_phi = std::max(params.sigma_min, params.gamma * state.sigma_phi);
  GrayImage smoothed = convolve(raw, gaussian_kernel(next.sigma_phi));
  next.beta = params.gamma * state.beta;
  next.phi = std::move(smoothed);
  next.phi *= 1.0 - next.beta;
  next.phi.axpy(next.beta, state.phi);
  for (double& v : next.phi.data()) v = std::clamp(v, std::numeric_limits<double>::min(), 1.0);
  return next;
}

std::vector<NltvWeight> nltv_weights(const GrayImage& x, int window, int patch, double eta) {
  require_odd(window, "nltv_weights: window");
  require_odd(patch, "nltv_weights: patch");
  if (!(eta > 0.0)) throw InvalidArgument("nltv_weights: eta must be positive");
  const int rw = window / 2;
  const int rp = patch / 2;
  const double inv = 1.0 / (eta * eta);
  std::vector<NltvWeight> maps;
  maps.reserve(static_cast<std::size_t>(window * window - 1));
  for (int dy = -rw; dy <= rw; ++dy) {
    for (int dx = -rw; dx <= rw; ++dx) {
      if (dx == 0 && dy == 0) continue;
      GrayImage w(x.shape());
      for (int i = 0; i < x.height(); ++i) {
        for (int j = 0; j < x.width(); ++j) {
          double dist = 0.0;
          for (int u = -rp; u <= rp; ++u) {
            for (int v = -rp; v <= rp; ++v) {
              const double diff =
                  x.clamped(i + u, j + v) - x.clamped(i + dy + u, j + dx + v);
              dist += diff * diff;
            }
          }
          w(i, j) = std::max(std::exp(-dist * inv), std::numeric_limits<double>::min());
        }
      }
      maps.push_back(NltvWeight{dx, dy, std::move(w)});
    }
  }
  return maps;
}

double edge_mask_width(const GrayImage& phi, const GrayImage& reference, double threshold) {
  require_same_shape(phi, reference, "edge_mask_width");
  const Gradient g = gradient_forward(reference);
  std::size_t edges = 0;
  std::size_t masked = 0;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    if (g.gx[k] != 0.0 || g.gy[k] != 0.0) ++edges;
    if (phi[k] < threshold) ++masked;
  }
  if (edges == 0) throw InvalidArgument("edge_mask_width: reference has no edges");
  return static_cast<double>(masked) / static_cast<double>(edges);
}

}  // namespace bswtv
