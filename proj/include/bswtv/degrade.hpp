#pragma once

// Linear degradation operators (motion, blur, decimation, and the weighted
// finite-difference operators used as ADMM constraints) together with the
// mixed Poisson-Gaussian noise simulator.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bswtv/image.hpp"

namespace bswtv {

// Matrix-free linear operator, stored as a chain of primitive stages that are
// applied first to last. The adjoint runs the chain backwards with each
// stage's exact transpose.
class LinearOp {
 public:
  struct Identity {};
  // Bilinear resampling at (col + dx, row + dy), coordinates clamped into the image.
  struct SubpixelShift {
    double dx = 0.0;
    double dy = 0.0;
  };
  struct Blur {
    Kernel2D kernel;
  };
  // Keeps every factor-th pixel starting at (0, 0).
  struct Downsample {
    int factor = 1;
  };
  // Pointwise multiplication by a fixed map.
  struct Diagonal {
    GrayImage weights;
  };
  // (S_D - I): out(i,j) = in(clamp(i+dy), clamp(j+dx)) - in(i,j).
  struct ShiftDifference {
    int dx = 0;
    int dy = 0;
  };
  using Stage = std::variant<Identity, SubpixelShift, Blur, Downsample, Diagonal, ShiftDifference>;

  static LinearOp identity(Shape shape);
  static LinearOp subpixel_shift(Shape shape, double dx, double dy);
  static LinearOp blur(Shape shape, Kernel2D kernel);
  static LinearOp downsample(Shape in_shape, int factor);
  static LinearOp diagonal(GrayImage weights);
  static LinearOp shift_difference(Shape shape, int dx, int dy);

  // Composition: `this` is applied first, then `next`.
  LinearOp then(const LinearOp& next) const;
  static LinearOp chain(const std::vector<LinearOp>& ops);

  Shape in_shape() const { return in_; }
  Shape out_shape() const { return out_; }
  std::size_t stage_count() const { return stages_.size(); }
  bool is_identity() const;

  GrayImage apply(const GrayImage& x) const;
  GrayImage adjoint(const GrayImage& y) const;

  // Short human-readable description, e.g. "shift(0.5,0)>blur(r=1)>down(2)".
  std::string describe() const;

 private:
  struct Entry {
    Stage stage;
    Shape in;
    Shape out;
  };
  LinearOp(Shape in, Shape out, std::vector<Entry> stages)
      : in_(in), out_(out), stages_(std::move(stages)) {}

  Shape in_;
  Shape out_;
  std::vector<Entry> stages_;
};

GrayImage apply(const LinearOp& op, const GrayImage& x);
GrayImage adjoint(const LinearOp& op, const GrayImage& y);

// Floor applied to the Gaussian variance (and to the fidelity denominator).
inline constexpr double kVarianceFloor = 1e-6;

struct NoiseParams {
  double alpha = 0.0;  // Poisson gain
  double mu = 0.0;     // Gaussian mean
  double sigma = 0.0;  // Gaussian standard deviation
  // Optional per-pixel sigma on the frame grid; overrides `sigma` when set.
  std::vector<double> sigma_map;

  // Gaussian variance at pixel j, floored at kVarianceFloor.
  double variance(std::size_t j) const;
  void validate() const;
};

struct FrameModel {
  GrayImage observation;
  LinearOp op;
  NoiseParams noise;

  void validate() const;
};

// y = alpha * Poisson(z / alpha) + N(mu, sigma^2), deterministic in `seed`.
GrayImage add_mpg_noise(const GrayImage& clean, const NoiseParams& noise, std::uint64_t seed);

struct SubpixelOffset {
  double dx = 0.0;
  double dy = 0.0;
};

// The four half-pixel offsets of the standard 2x four-frame protocol.
std::vector<SubpixelOffset> half_pixel_offsets();

// A_i = D B M_i for one frame on an HR grid of `hr` shape.
LinearOp make_system_op(Shape hr, SubpixelOffset shift, const std::optional<Kernel2D>& blur,
                        int factor);

// Simulates one noisy LR frame per shift. Frame i draws its noise from seed + i.
std::vector<FrameModel> make_lr_frames(const GrayImage& gt,
                                       const std::vector<SubpixelOffset>& shifts,
                                       const std::optional<Kernel2D>& blur, int factor,
                                       const NoiseParams& noise, std::uint64_t seed);

// Catmull-Rom (a = -0.5) upscaling. HR pixel (i, j) samples LR coordinate
// (i / factor, j / factor), matching decimation at the origin.
GrayImage bicubic_upscale(const GrayImage& lr, int factor);

}  // namespace bswtv
