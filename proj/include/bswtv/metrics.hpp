#pragma once

#include "bswtv/image.hpp"

namespace bswtv {

struct QualityReport {
  double psnr_db = 0.0;
  double ssim = 0.0;
  double mse = 0.0;
  bool identical = false;  // psnr_db is +infinity
};

double mse(const GrayImage& ref, const GrayImage& test);

// 10 log10(peak^2 / MSE); +infinity when the images are identical.
double psnr(const GrayImage& ref, const GrayImage& test, double peak = 255.0);

// Mean SSIM over all fully contained 11x11 windows, Gaussian weights with
// sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range `peak`.
double ssim(const GrayImage& ref, const GrayImage& test, double peak = 255.0);

QualityReport evaluate_quality(const GrayImage& ref, const GrayImage& test, double peak = 255.0);

}  // namespace bswtv
