#pragma once

// Image container and the small set of stencil primitives everything else is
// built on. All boundary handling is replicate (Neumann): an index that falls
// off the image is clamped to the nearest edge pixel.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace bswtv {

struct Shape {
  int height = 0;
  int width = 0;

  std::size_t pixels() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  bool operator==(const Shape&) const = default;
};

// Row-major 2-D field of double intensities.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);
  GrayImage(int width, int height, std::vector<double> data);
  explicit GrayImage(Shape shape, double fill = 0.0)
      : GrayImage(shape.width, shape.height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  Shape shape() const { return {height_, width_}; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int row, int col) {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  double operator()(int row, int col) const {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Value at (row, col) with both indices clamped into the image.
  double clamped(int row, int col) const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool all_finite() const;

  GrayImage& operator+=(const GrayImage& other);
  GrayImage& operator-=(const GrayImage& other);
  GrayImage& operator*=(double s);
  // this += s * other
  GrayImage& axpy(double s, const GrayImage& other);

  friend GrayImage operator+(GrayImage a, const GrayImage& b) { return a += b; }
  friend GrayImage operator-(GrayImage a, const GrayImage& b) { return a -= b; }
  friend GrayImage operator*(GrayImage a, double s) { return a *= s; }
  friend GrayImage operator*(double s, GrayImage a) { return a *= s; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// Throws InvalidArgument unless a and b have identical shapes.
void require_same_shape(const GrayImage& a, const GrayImage& b, const char* what);

double dot(const GrayImage& a, const GrayImage& b);
double squared_norm(const GrayImage& a);
double norm(const GrayImage& a);
double sum(const GrayImage& a);
double mean(const GrayImage& a);
// Elementwise product.
GrayImage hadamard(const GrayImage& a, const GrayImage& b);

// Square correlation kernel with (2*radius+1)^2 taps.
class Kernel2D {
 public:
  Kernel2D(int radius, std::vector<double> weights);

  int radius() const { return radius_; }
  int size() const { return 2 * radius_ + 1; }
  // Tap at offset (dy, dx), both in [-radius, radius].
  double at(int dy, int dx) const {
    return weights_[static_cast<std::size_t>(dy + radius_) * size() + (dx + radius_)];
  }
  const std::vector<double>& weights() const { return weights_; }

 private:
  int radius_;
  std::vector<double> weights_;
};

// output(i, j) = input(clamp(i - dy), clamp(j - dx)).
GrayImage shift_image(const GrayImage& img, int dx, int dy);

struct Gradient {
  GrayImage gx;
  GrayImage gy;
};

// gx(i,j) = x(i,j+1) - x(i,j), gy(i,j) = x(i+1,j) - x(i,j); zero on the last
// column / row respectively.
Gradient gradient_forward(const GrayImage& img);

// Halved central differences, gx(i,j) = (x(i,j+1) - x(i,j-1)) / 2.
Gradient gradient_central(const GrayImage& img);

// Normalized isotropic Gaussian with radius ceil(3 sigma).
Kernel2D gaussian_kernel(double sigma);
// Same, truncated to an explicit radius (e.g. radius 1 for a 3x3 blur).
Kernel2D gaussian_kernel(double sigma, int radius);

// Correlation with replicate boundary.
GrayImage convolve(const GrayImage& img, const Kernel2D& k);
// Exact transpose of convolve() for the same image shape.
GrayImage convolve_adjoint(const GrayImage& img, const Kernel2D& k);

// Mean over the (2*radius+1)^2 box around each pixel, replicate boundary.
GrayImage box_mean(const GrayImage& img, int radius);

}  // namespace bswtv
