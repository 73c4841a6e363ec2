#pragma once

#include "tensor.hpp"

#include <string>
#include <vector>

namespace deqpocs {

// z(p) = sqrt(sum_c |x_c(p)|^2)
RealImage ssos(ComplexTensor const &coil_images);
// ssos(ifft2_centered(kspace)), the image every metric is computed on.
RealImage ssos_image(ComplexTensor const &kspace);

inline constexpr double kPsnrCap = 99.0;

// 10 log10(max(ref)^2 / MSE), capped at kPsnrCap when MSE = 0.
double psnr(RealImage const &test, RealImage const &ref);
// ||test - ref||^2 / ||ref||^2
double nmse(RealImage const &test, RealImage const &ref);
// Mean SSIM over all valid 11x11 Gaussian (sigma 1.5) windows,
// C1 = (0.01 DR)^2, C2 = (0.03 DR)^2 with DR the reference dynamic range.
double ssim(RealImage const &test, RealImage const &ref);

struct SampleMetrics
{
  std::string id;
  double nmse = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

SampleMetrics evaluate_kspace(std::string id, ComplexTensor const &recon, ComplexTensor const &reference);

struct MetricsReport
{
  std::vector<SampleMetrics> rows;
  SampleMetrics mean;
  SampleMetrics stddev;
};

MetricsReport summarize(std::vector<SampleMetrics> rows);

// sample_id,nmse,psnr,ssim rows, then "mean" and "std" rows.
std::string metrics_csv(MetricsReport const &report);

} // namespace deqpocs
