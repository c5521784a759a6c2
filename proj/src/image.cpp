#include "bswtv/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bswtv/error.hpp"

namespace bswtv {

namespace {

inline int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

}  // namespace

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw InvalidArgument("GrayImage: dimensions must be >= 1, got " +
                          std::to_string(width) + "x" + std::to_string(height));
  }
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 1 || height < 1) {
    throw InvalidArgument("GrayImage: dimensions must be >= 1");
  }
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidArgument("GrayImage: data length " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
}

double GrayImage::clamped(int row, int col) const {
  return (*this)(clamp_index(row, height_), clamp_index(col, width_));
}

bool GrayImage::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

GrayImage& GrayImage::operator+=(const GrayImage& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

GrayImage& GrayImage::operator-=(const GrayImage& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

GrayImage& GrayImage::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

GrayImage& GrayImage::axpy(double s, const GrayImage& other) {
  require_same_shape(*this, other, "axpy");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
  return *this;
}

void require_same_shape(const GrayImage& a, const GrayImage& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw InvalidArgument(std::string(what) + ": shape mismatch (" +
                          std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                          " vs " + std::to_string(b.height()) + "x" +
                          std::to_string(b.width()) + ")");
  }
}

double dot(const GrayImage& a, const GrayImage& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double squared_norm(const GrayImage& a) { return dot(a, a); }

double norm(const GrayImage& a) { return std::sqrt(squared_norm(a)); }

double sum(const GrayImage& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  return acc;
}

double mean(const GrayImage& a) { return sum(a) / static_cast<double>(a.size()); }

GrayImage hadamard(const GrayImage& a, const GrayImage& b) {
  require_same_shape(a, b, "hadamard");
  GrayImage out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

Kernel2D::Kernel2D(int radius, std::vector<double> weights)
    : radius_(radius), weights_(std::move(weights)) {
  if (radius < 0) throw InvalidArgument("Kernel2D: negative radius");
  const auto n = static_cast<std::size_t>(2 * radius + 1);
  if (weights_.size() != n * n) {
    throw InvalidArgument("Kernel2D: expected " + std::to_string(n * n) + " weights, got " +
                          std::to_string(weights_.size()));
  }
}

GrayImage shift_image(const GrayImage& img, int dx, int dy) {
  const int limit = std::min(img.width(), img.height());
  if (std::abs(dx) > limit || std::abs(dy) > limit) {
    throw InvalidArgument("shift_image: shift (" + std::to_string(dx) + ", " +
                          std::to_string(dy) + ") exceeds image extent " +
                          std::to_string(limit));
  }
  GrayImage out(img.shape());
  for (int i = 0; i < img.height(); ++i) {
    for (int j = 0; j < img.width(); ++j) out(i, j) = img.clamped(i - dy, j - dx);
  }
  return out;
}

Gradient gradient_forward(const GrayImage& img) {
  Gradient g{GrayImage(img.shape()), GrayImage(img.shape())};
  for (int i = 0; i < img.height(); ++i) {
    for (int j = 0; j < img.width(); ++j) {
      const double c = img(i, j);
      g.gx(i, j) = img.clamped(i, j + 1) - c;
      g.gy(i, j) = img.clamped(i + 1, j) - c;
    }
  }
  return g;
}

Gradient gradient_central(const GrayImage& img) {
  Gradient g{GrayImage(img.shape()), GrayImage(img.shape())};
  for (int i = 0; i < img.height(); ++i) {
    for (int j = 0; j < img.width(); ++j) {
      g.gx(i, j) = 0.5 * (img.clamped(i, j + 1) - img.clamped(i, j - 1));
      g.gy(i, j) = 0.5 * (img.clamped(i + 1, j) - img.clamped(i - 1, j));
    }
  }
  return g;
}

Kernel2D gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian_kernel: sigma must be positive");
  return gaussian_kernel(sigma, static_cast<int>(std::ceil(3.0 * sigma)));
}

Kernel2D gaussian_kernel(double sigma, int radius) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian_kernel: sigma must be positive");
  if (radius < 0) throw InvalidArgument("gaussian_kernel: negative radius");
  const int n = 2 * radius + 1;
  std::vector<double> w(static_cast<std::size_t>(n) * n);
  double total = 0.0;
  for (int u = -radius; u <= radius; ++u) {
    for (int v = -radius; v <= radius; ++v) {
      const double e = std::exp(-(u * u + v * v) / (2.0 * sigma * sigma));
      w[static_cast<std::size_t>(u + radius) * n + (v + radius)] = e;
      total += e;
    }
  }
  for (double& e : w) e /= total;
  return Kernel2D(radius, std::move(w));
}

GrayImage convolve(const GrayImage& img, const Kernel2D& k) {
  const int r = k.radius();
  GrayImage out(img.shape());
  for (int i = 0; i < img.height(); ++i) {
    for (int j = 0; j < img.width(); ++j) {
      double acc = 0.0;
      for (int u = -r; u <= r; ++u) {
        for (int v = -r; v <= r; ++v) acc += k.at(u, v) * img.clamped(i + u, j + v);
      }
      out(i, j) = acc;
    }
  }
  return out;
}

GrayImage convolve_adjoint(const GrayImage& img, const Kernel2D& k) {
  const int r = k.radius();
  const int h = img.height();
  const int w = img.width();
  GrayImage out(img.shape());
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const double y = img(i, j);
      if (y == 0.0) continue;
      for (int u = -r; u <= r; ++u) {
        const int ii = clamp_index(i + u, h);
        for (int v = -r; v <= r; ++v) out(ii, clamp_index(j + v, w)) += k.at(u, v) * y;
      }
    }
  }
  return out;
}

GrayImage box_mean(const GrayImage& img, int radius) {
  const int n = 2 * radius + 1;
  const double inv = 1.0 / static_cast<double>(n * n);
  GrayImage out(img.shape());
  for (int i = 0; i < img.height(); ++i) {
    for (int j = 0; j < img.width(); ++j) {
      double acc = 0.0;
      for (int u = -radius; u <= radius; ++u) {
        for (int v = -radius; v <= radius; ++v) acc += img.clamped(i + u, j + v);
      }
      out(i, j) = acc * inv;
    }
  }
  return out;
}

}  // namespace bswtv
