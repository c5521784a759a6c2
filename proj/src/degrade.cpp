#include "bswtv/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "bswtv/error.hpp"

namespace bswtv {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Linear interpolation taps along one axis for sample positions p + offset.
struct Taps {
  std::vector<int> lo;
  std::vector<int> hi;
  std::vector<double> t;  // weight of `hi`
};

Taps bilinear_taps(int n, double offset) {
  Taps taps;
  taps.lo.resize(n);
  taps.hi.resize(n);
  taps.t.resize(n);
  for (int p = 0; p < n; ++p) {
    const double c = std::clamp(p + offset, 0.0, static_cast<double>(n - 1));
    const int lo = static_cast<int>(std::floor(c));
    taps.lo[p] = lo;
    taps.hi[p] = std::min(lo + 1, n - 1);
    taps.t[p] = c - lo;
  }
  return taps;
}

GrayImage shift_forward(const GrayImage& x, const LinearOp::SubpixelShift& s) {
  const Taps ty = bilinear_taps(x.height(), s.dy);
  const Taps tx = bilinear_taps(x.width(), s.dx);
  GrayImage out(x.shape());
  for (int i = 0; i < x.height(); ++i) {
    const double wy1 = ty.t[i];
    const double wy0 = 1.0 - wy1;
    for (int j = 0; j < x.width(); ++j) {
      const double wx1 = tx.t[j];
      const double wx0 = 1.0 - wx1;
      out(i, j) = wy0 * (wx0 * x(ty.lo[i], tx.lo[j]) + wx1 * x(ty.lo[i], tx.hi[j])) +
                  wy1 * (wx0 * x(ty.hi[i], tx.lo[j]) + wx1 * x(ty.hi[i], tx.hi[j]));
    }
  }
  return out;
}

GrayImage shift_transpose(const GrayImage& y, const LinearOp::SubpixelShift& s) {
  const Taps ty = bilinear_taps(y.height(), s.dy);
  const Taps tx = bilinear_taps(y.width(), s.dx);
  GrayImage out(y.shape());
  for (int i = 0; i < y.height(); ++i) {
    const double wy1 = ty.t[i];
    const double wy0 = 1.0 - wy1;
    for (int j = 0; j < y.width(); ++j) {
      const double v = y(i, j);
      const double wx1 = tx.t[j];
      const double wx0 = 1.0 - wx1;
      out(ty.lo[i], tx.lo[j]) += wy0 * wx0 * v;
      out(ty.lo[i], tx.hi[j]) += wy0 * wx1 * v;
      out(ty.hi[i], tx.lo[j]) += wy1 * wx0 * v;
      out(ty.hi[i], tx.hi[j]) += wy1 * wx1 * v;
    }
  }
  return out;
}

GrayImage decimate(const GrayImage& x, int f, Shape out_shape) {
  GrayImage out(out_shape);
  for (int i = 0; i < out_shape.height; ++i) {
    for (int j = 0; j < out_shape.width; ++j) out(i, j) = x(i * f, j * f);
  }
  return out;
}

GrayImage zero_stuff(const GrayImage& y, int f, Shape in_shape) {
  GrayImage out(in_shape);
  for (int i = 0; i < y.height(); ++i) {
    for (int j = 0; j < y.width(); ++j) out(i * f, j * f) = y(i, j);
  }
  return out;
}

GrayImage shift_difference_forward(const GrayImage& x, int dx, int dy) {
  GrayImage out(x.shape());
  for (int i = 0; i < x.height(); ++i) {
    for (int j = 0; j < x.width(); ++j) out(i, j) = x.clamped(i + dy, j + dx) - x(i, j);
  }
  return out;
}

GrayImage shift_difference_transpose(const GrayImage& y, int dx, int dy) {
  const int h = y.height();
  const int w = y.width();
  GrayImage out(y.shape());
  for (int i = 0; i < h; ++i) {
    const int ii = std::clamp(i + dy, 0, h - 1);
    for (int j = 0; j < w; ++j) {
      const double v = y(i, j);
      out(ii, std::clamp(j + dx, 0, w - 1)) += v;
      out(i, j) -= v;
    }
  }
  return out;
}

GrayImage stage_forward(const LinearOp::Stage& stage, const GrayImage& x, Shape out_shape) {
  return std::visit(
      overloaded{
          [&](const LinearOp::Identity&) { return x; },
          [&](const LinearOp::SubpixelShift& s) { return shift_forward(x, s); },
          [&](const LinearOp::Blur& b) { return convolve(x, b.kernel); },
          [&](const LinearOp::Downsample& d) { return decimate(x, d.factor, out_shape); },
          [&](const LinearOp::Diagonal& d) { return hadamard(x, d.weights); },
          [&](const LinearOp::ShiftDifference& s) {
            return shift_difference_forward(x, s.dx, s.dy);
          },
      },
      stage);
}

GrayImage stage_transpose(const LinearOp::Stage& stage, const GrayImage& y, Shape in_shape) {
  return std::visit(
      overloaded{
          [&](const LinearOp::Identity&) { return y; },
          [&](const LinearOp::SubpixelShift& s) { return shift_transpose(y, s); },
          [&](const LinearOp::Blur& b) { return convolve_adjoint(y, b.kernel); },
          [&](const LinearOp::Downsample& d) { return zero_stuff(y, d.factor, in_shape); },
          [&](const LinearOp::Diagonal& d) { return hadamard(y, d.weights); },
          [&](const LinearOp::ShiftDifference& s) {
            return shift_difference_transpose(y, s.dx, s.dy);
          },
      },
      stage);
}

std::string shape_str(Shape s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width);
}

void require_valid_shape(Shape s, const char* what) {
  if (s.height < 1 || s.width < 1) {
    throw InvalidArgument(std::string(what) + ": invalid shape " + shape_str(s));
  }
}

}  // namespace

LinearOp LinearOp::identity(Shape shape) {
  require_valid_shape(shape, "LinearOp::identity");
  return LinearOp(shape, shape, {});
}

LinearOp LinearOp::subpixel_shift(Shape shape, double dx, double dy) {
  require_valid_shape(shape, "LinearOp::subpixel_shift");
  if (!std::isfinite(dx) || !std::isfinite(dy)) {
    throw InvalidArgument("LinearOp::subpixel_shift: non-finite offset");
  }
  return LinearOp(shape, shape, {Entry{SubpixelShift{dx, dy}, shape, shape}});
}

LinearOp LinearOp::blur(Shape shape, Kernel2D kernel) {
  require_valid_shape(shape, "LinearOp::blur");
  return LinearOp(shape, shape, {Entry{Blur{std::move(kernel)}, shape, shape}});
}

LinearOp LinearOp::downsample(Shape in_shape, int factor) {
  require_valid_shape(in_shape, "LinearOp::downsample");
  if (factor < 1) throw InvalidArgument("LinearOp::downsample: factor must be >= 1");
  if (in_shape.height % factor != 0 || in_shape.width % factor != 0) {
    throw InvalidArgument("LinearOp::downsample: shape " + shape_str(in_shape) +
                          " not divisible by factor " + std::to_string(factor));
  }
  const Shape out{in_shape.height / factor, in_shape.width / factor};
  if (factor == 1) return identity(in_shape);
  return LinearOp(in_shape, out, {Entry{Downsample{factor}, in_shape, out}});
}

LinearOp LinearOp::diagonal(GrayImage weights) {
  const Shape s = weights.shape();
  require_valid_shape(s, "LinearOp::diagonal");
  return LinearOp(s, s, {Entry{Diagonal{std::move(weights)}, s, s}});
}

LinearOp LinearOp::shift_difference(Shape shape, int dx, int dy) {
  require_valid_shape(shape, "LinearOp::shift_difference");
  return LinearOp(shape, shape, {Entry{ShiftDifference{dx, dy}, shape, shape}});
}

LinearOp LinearOp::then(const LinearOp& next) const {
  if (out_ != next.in_) {
    throw InvalidArgument("LinearOp::then: output shape " + shape_str(out_) +
                          " does not match next input shape " + shape_str(next.in_));
  }
  std::vector<Entry> stages = stages_;
  stages.insert(stages.end(), next.stages_.begin(), next.stages_.end());
  return LinearOp(in_, next.out_, std::move(stages));
}

LinearOp LinearOp::chain(const std::vector<LinearOp>& ops) {
  if (ops.empty()) throw InvalidArgument("LinearOp::chain: empty operator list");
  LinearOp out = ops.front();
  for (std::size_t k = 1; k < ops.size(); ++k) out = out.then(ops[k]);
  return out;
}

bool LinearOp::is_identity() const {
  return std::all_of(stages_.begin(), stages_.end(), [](const Entry& e) {
    return std::holds_alternative<Identity>(e.stage);
  });
}

GrayImage LinearOp::apply(const GrayImage& x) const {
  if (x.shape() != in_) {
    throw InvalidArgument("LinearOp::apply: input shape " + shape_str(x.shape()) +
                          " != operator input " + shape_str(in_));
  }
  GrayImage cur = x;
  for (const Entry& e : stages_) cur = stage_forward(e.stage, cur, e.out);
  return cur;
}

GrayImage LinearOp::adjoint(const GrayImage& y) const {
  if (y.shape() != out_) {
    throw InvalidArgument("LinearOp::adjoint: input shape " + shape_str(y.shape()) +
                          " != operator output " + shape_str(out_));
  }
  GrayImage cur = y;
  for (auto it = stages_.rbegin(); it != stages_.rend(); ++it) {
    cur = stage_transpose(it->stage, cur, it->in);
  }
  return cur;
}

std::string LinearOp::describe() const {
  if (stages_.empty()) return "identity";
  std::ostringstream os;
  for (std::size_t k = 0; k < stages_.size(); ++k) {
    if (k) os << '>';
    std::visit(overloaded{
                   [&](const Identity&) { os << "identity"; },
                   [&](const SubpixelShift& s) { os << "shift(" << s.dx << ',' << s.dy << ')'; },
                   [&](const Blur& b) { os << "blur(r=" << b.kernel.radius() << ')'; },
                   [&](const Downsample& d) { os << "down(" << d.factor << ')'; },
                   [&](const Diagonal&) { os << "diag"; },
                   [&](const ShiftDifference& s) {
                     os << "diff(" << s.dx << ',' << s.dy << ')';
                   },
               },
               stages_[k].stage);
  }
  return os.str();
}

GrayImage apply(const LinearOp& op, const GrayImage& x) { return op.apply(x); }
GrayImage adjoint(const LinearOp& op, const GrayImage& y) { return op.adjoint(y); }

double NoiseParams::variance(std::size_t j) const {
  const double s = sigma_map.empty() ? sigma : sigma_map[j];
  return std::max(s * s, kVarianceFloor);
}

void NoiseParams::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("NoiseParams: alpha must be finite and >= 0");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("NoiseParams: sigma must be finite and >= 0");
  }
  if (!std::isfinite(mu)) throw InvalidArgument("NoiseParams: mu must be finite");
  for (double s : sigma_map) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw InvalidArgument("NoiseParams: sigma_map entries must be finite and >= 0");
    }
  }
}

void FrameModel::validate() const {
  noise.validate();
  if (op.out_shape() != observation.shape()) {
    throw InvalidArgument("FrameModel: operator output " + shape_str(op.out_shape()) +
                          " does not match observation " + shape_str(observation.shape()));
  }
  if (!noise.sigma_map.empty() && noise.sigma_map.size() != observation.size()) {
    throw InvalidArgument("FrameModel: sigma_map size does not match observation");
  }
}

GrayImage add_mpg_noise(const GrayImage& clean, const NoiseParams& noise, std::uint64_t seed) {
  noise.validate();
  if (!noise.sigma_map.empty() && noise.sigma_map.size() != clean.size()) {
    throw InvalidArgument("add_mpg_noise: sigma_map size does not match image");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  GrayImage out(clean.shape());
  for (std::size_t j = 0; j < clean.size(); ++j) {
    const double z = clean[j];
    double v = z;
    if (noise.alpha > 0.0) {
      if (z < 0.0) {
        throw InvalidArgument("add_mpg_noise: negative intensity " + std::to_string(z) +
                              " at pixel " + std::to_string(j) + " with alpha > 0");
      }
      const double rate = z / noise.alpha;
      if (rate > 0.0) {
        std::poisson_distribution<long long> poisson(rate);
        v = noise.alpha * static_cast<double>(poisson(rng));
      } else {
        v = 0.0;
      }
    }
    const double s = noise.sigma_map.empty() ? noise.sigma : noise.sigma_map[j];
    v += noise.mu;
    if (s > 0.0) v += s * gauss(rng);
    out[j] = v;
  }
  return out;
}

std::vector<SubpixelOffset> half_pixel_offsets() {
  return {{0.0, 0.0}, {0.5, 0.0}, {0.5, 0.5}, {0.0, 0.5}};
}

LinearOp make_system_op(Shape hr, SubpixelOffset shift, const std::optional<Kernel2D>& blur,
                        int factor) {
  std::vector<LinearOp> stages;
  if (shift.dx != 0.0 || shift.dy != 0.0) {
    stages.push_back(LinearOp::subpixel_shift(hr, shift.dx, shift.dy));
  }
  if (blur) stages.push_back(LinearOp::blur(hr, *blur));
  stages.push_back(LinearOp::downsample(hr, factor));
  return LinearOp::chain(stages);
}

std::vector<FrameModel> make_lr_frames(const GrayImage& gt,
                                       const std::vector<SubpixelOffset>& shifts,
                                       const std::optional<Kernel2D>& blur, int factor,
                                       const NoiseParams& noise, std::uint64_t seed) {
  if (factor < 1) throw InvalidArgument("make_lr_frames: factor must be >= 1");
  if (gt.width() % factor != 0 || gt.height() % factor != 0) {
    throw InvalidArgument("make_lr_frames: " + shape_str(gt.shape()) +
                          " not divisible by factor " + std::to_string(factor));
  }
  if (shifts.empty()) throw InvalidArgument("make_lr_frames: no shifts given");
  std::vector<FrameModel> frames;
  frames.reserve(shifts.size());
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    LinearOp op = make_system_op(gt.shape(), shifts[i], blur, factor);
    GrayImage clean = op.apply(gt);
    GrayImage noisy = add_mpg_noise(clean, noise, seed + i);
    frames.push_back(FrameModel{std::move(noisy), std::move(op), noise});
  }
  return frames;
}

namespace {

double catmull_rom(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

}  // namespace

GrayImage bicubic_upscale(const GrayImage& lr, int factor) {
  if (factor < 1) throw InvalidArgument("bicubic_upscale: factor must be >= 1");
  if (factor == 1) return lr;
  GrayImage out(lr.width() * factor, lr.height() * factor);
  for (int i = 0; i < out.height(); ++i) {
    const double cy = static_cast<double>(i) / factor;
    const int y0 = static_cast<int>(std::floor(cy));
    for (int j = 0; j < out.width(); ++j) {
      const double cx = static_cast<double>(j) / factor;
      const int x0 = static_cast<int>(std::floor(cx));
      double acc = 0.0;
      for (int u = -1; u <= 2; ++u) {
        const double wy = catmull_rom(cy - (y0 + u));
        for (int v = -1; v <= 2; ++v) {
          acc += wy * catmull_rom(cx - (x0 + v)) * lr.clamped(y0 + u, x0 + v);
        }
      }
      out(i, j) = acc;
    }
  }
  return out;
}

}  // namespace bswtv
