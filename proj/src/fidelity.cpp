#include "bswtv/fidelity.hpp"

#include <cmath>
#include <string>

#include "bswtv/error.hpp"

namespace bswtv {

namespace {

// Denominators alpha*u + sigma^2, floored; throws when too many need the floor.
std::vector<double> denominators(const FrameModel& frame, const GrayImage& u) {
  std::vector<double> d(u.size());
  std::size_t clamped = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    double v = frame.noise.alpha * u[j] + frame.noise.variance(j);
    if (!(v >= kVarianceFloor)) {
      ++clamped;
      v = kVarianceFloor;
    }
    d[j] = v;
  }
  if (static_cast<double>(clamped) > kMaxClampedFraction * static_cast<double>(u.size())) {
    throw DomainError("alpha*Az + sigma^2 fell below " + std::to_string(kVarianceFloor) +
                      " on " + std::to_string(clamped) + " of " + std::to_string(u.size()) +
                      " pixels");
  }
  return d;
}

}  // namespace

GrayImage weight_diag(const FrameModel& frame, const GrayImage& x) {
  const GrayImage u = frame.op.apply(x);
  const std::vector<double> d = denominators(frame, u);
  GrayImage w(u.shape());
  for (std::size_t j = 0; j < d.size(); ++j) w[j] = 1.0 / d[j];
  return w;
}

FidelityEval evaluate(const FrameModel& frame, const GrayImage& z, DataTerm term) {
  const GrayImage u = frame.op.apply(z);
  const GrayImage& y = frame.observation;
  require_same_shape(u, y, "fidelity");
  const double mu = frame.noise.mu;
  GrayImage du(u.shape());
  double value = 0.0;
  if (term == DataTerm::l2) {
    for (std::size_t j = 0; j < u.size(); ++j) {
      const double r = y[j] - u[j] - mu;
      value += r * r;
      du[j] = -r;
    }
  } else {
    const double alpha = frame.noise.alpha;
    const std::vector<double> d = denominators(frame, u);
    for (std::size_t j = 0; j < u.size(); ++j) {
      const double r = y[j] - u[j] - mu;
      const double inv = 1.0 / d[j];
      value += r * r * inv + std::log(d[j]);
      du[j] = -r * inv - 0.5 * alpha * r * r * inv * inv + 0.5 * alpha * inv;
    }
  }
  return {0.5 * value, frame.op.adjoint(du)};
}

double frame_nll(const FrameModel& frame, const GrayImage& z, DataTerm term) {
  const GrayImage u = frame.op.apply(z);
  const GrayImage& y = frame.observation;
  require_same_shape(u, y, "frame_nll");
  const double mu = frame.noise.mu;
  double value = 0.0;
  if (term == DataTerm::l2) {
    for (std::size_t j = 0; j < u.size(); ++j) {
      const double r = y[j] - u[j] - mu;
      value += r * r;
    }
  } else {
    const std::vector<double> d = denominators(frame, u);
    for (std::size_t j = 0; j < u.size(); ++j) {
      const double r = y[j] - u[j] - mu;
      value += r * r / d[j] + std::log(d[j]);
    }
  }
  return 0.5 * value;
}

double nll(std::span<const FrameModel> frames, const GrayImage& x, DataTerm term) {
  double total = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    try {
      total += frame_nll(frames[i], x, term);
    } catch (const DomainError& e) {
      throw DomainError("frame " + std::to_string(i) + ": " + e.what());
    }
  }
  return total;
}

GrayImage nll_grad(const FrameModel& frame, const GrayImage& z, DataTerm term) {
  return evaluate(frame, z, term).gradient;
}

}  // namespace bswtv
