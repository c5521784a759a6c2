#include "bswtv/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "bswtv/error.hpp"

namespace bswtv {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

}  // namespace

double mse(const GrayImage& ref, const GrayImage& test) {
  require_same_shape(ref, test, "mse");
  double acc = 0.0;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const double d = ref[k] - test[k];
    acc += d * d;
  }
  return acc / static_cast<double>(ref.size());
}

double psnr(const GrayImage& ref, const GrayImage& test, double peak) {
  if (!(peak > 0.0)) throw InvalidArgument("psnr: peak must be positive");
  const double e = mse(ref, test);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / e);
}

double ssim(const GrayImage& ref, const GrayImage& test, double peak) {
  require_same_shape(ref, test, "ssim");
  if (!(peak > 0.0)) throw InvalidArgument("ssim: peak must be positive");
  if (ref.width() < kWindow || ref.height() < kWindow) {
    throw InvalidArgument("ssim: images must be at least 11x11");
  }
  const Kernel2D k = gaussian_kernel(kWindowSigma, kWindow / 2);
  const double c1 = (kK1 * peak) * (kK1 * peak);
  const double c2 = (kK2 * peak) * (kK2 * peak);
  const int r = kWindow / 2;
  double total = 0.0;
  std::size_t count = 0;
  for (int i = r; i < ref.height() - r; ++i) {
    for (int j = r; j < ref.width() - r; ++j) {
      double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      for (int u = -r; u <= r; ++u) {
        for (int v = -r; v <= r; ++v) {
          const double w = k.at(u, v);
          const double a = ref(i + u, j + v);
          const double b = test(i + u, j + v);
          ma += w * a;
          mb += w * b;
          saa += w * a * a;
          sbb += w * b * b;
          sab += w * a * b;
        }
      }
      const double va = saa - ma * ma;
      const double vb = sbb - mb * mb;
      const double cov = sab - ma * mb;
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

QualityReport evaluate_quality(const GrayImage& ref, const GrayImage& test, double peak) {
  QualityReport q;
  q.mse = mse(ref, test);
  q.psnr_db = psnr(ref, test, peak);
  q.identical = q.mse == 0.0;
  q.ssim = q.identical ? 1.0 : ssim(ref, test, peak);
  return q;
}

}  // namespace bswtv
