#include "deqpocs/metrics.hpp"

#include "deqpocs/errors.hpp"
#include "deqpocs/fft.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>

namespace deqpocs {

RealImage ssos(ComplexTensor const &coil_images)
{
  RealImage out(coil_images.height(), coil_images.width());
  for (int h = 0; h < coil_images.height(); h++) {
    for (int w = 0; w < coil_images.width(); w++) {
      double s = 0.0;
      for (int c = 0; c < coil_images.channels(); c++) {
        s += std::norm(coil_images(h, w, c));
      }
      out(h, w) = std::sqrt(s);
    }
  }
  return out;
}

RealImage ssos_image(ComplexTensor const &kspace) { return ssos(ifft2_centered(kspace)); }

namespace {

void check_pair(RealImage const &test, RealImage const &ref)
{
  if (test.grid() != ref.grid()) {
    throw ShapeError(fmt::format(
      "metric inputs differ in shape: {}x{} vs {}x{}", test.height(), test.width(), ref.height(), ref.width()));
  }
  if (ref.size() == 0) {
    throw InvalidInputError("metric reference image is empty");
  }
}

double squared_error(RealImage const &test, RealImage const &ref)
{
  double s = 0.0;
  for (std::size_t i = 0; i < ref.size(); i++) {
    double const d = test.data()[i] - ref.data()[i];
    s += d * d;
  }
  return s;
}

constexpr int kWin = 11;

std::array<double, kWin * kWin> gaussian_window()
{
  std::array<double, kWin * kWin> g{};
  double const sigma = 1.5;
  double total = 0.0;
  for (int i = 0; i < kWin; i++) {
    for (int j = 0; j < kWin; j++) {
      double const di = i - kWin / 2;
      double const dj = j - kWin / 2;
      g[i * kWin + j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
      total += g[i * kWin + j];
    }
  }
  for (auto &v : g) {
    v /= total;
  }
  return g;
}

} // namespace

double psnr(RealImage const &test, RealImage const &ref)
{
  check_pair(test, ref);
  double const peak = *std::max_element(ref.data().begin(), ref.data().end());
  if (!(peak > 0.0)) {
    throw InvalidInputError("psnr: reference image has no positive peak");
  }
  double const mse = squared_error(test, ref) / static_cast<double>(ref.size());
  if (mse == 0.0) {
    return kPsnrCap;
  }
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double nmse(RealImage const &test, RealImage const &ref)
{
  check_pair(test, ref);
  double energy = 0.0;
  for (double v : ref.data()) {
    energy += v * v;
  }
  if (energy == 0.0) {
    throw InvalidInputError("nmse: reference image is identically zero");
  }
  return squared_error(test, ref) / energy;
}

double ssim(RealImage const &test, RealImage const &ref)
{
  check_pair(test, ref);
  if (ref.height() < kWin || ref.width() < kWin) {
    throw ShapeError(fmt::format("ssim needs images of at least {}x{}", kWin, kWin));
  }
  auto const [lo, hi] = std::minmax_element(ref.data().begin(), ref.data().end());
  double dr = *hi - *lo;
  if (dr == 0.0) {
    dr = 1.0;
  }
  double const c1 = (0.01 * dr) * (0.01 * dr);
  double const c2 = (0.03 * dr) * (0.03 * dr);
  auto const g = gaussian_window();

  double total = 0.0;
  int count = 0;
  for (int h0 = 0; h0 + kWin <= ref.height(); h0++) {
    for (int w0 = 0; w0 + kWin <= ref.width(); w0++) {
      double mx = 0.0, my = 0.0;
      for (int i = 0; i < kWin; i++) {
        for (int j = 0; j < kWin; j++) {
          double const wt = g[i * kWin + j];
          mx += wt * test(h0 + i, w0 + j);
          my += wt * ref(h0 + i, w0 + j);
        }
      }
      double sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (int i = 0; i < kWin; i++) {
        for (int j = 0; j < kWin; j++) {
          double const wt = g[i * kWin + j];
          double const dx = test(h0 + i, w0 + j) - mx;
          double const dy = ref(h0 + i, w0 + j) - my;
          sxx += wt * dx * dx;
          syy += wt * dy * dy;
          sxy += wt * dx * dy;
        }
      }
      total += ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
      count++;
    }
  }
  return total / count;
}

SampleMetrics evaluate_kspace(std::string id, ComplexTensor const &recon, ComplexTensor const &reference)
{
  require_same_shape(recon, reference, "evaluation");
  RealImage const test = ssos_image(recon);
  RealImage const ref = ssos_image(reference);
  return {std::move(id), nmse(test, ref), psnr(test, ref), ssim(test, ref)};
}

MetricsReport summarize(std::vector<SampleMetrics> rows)
{
  MetricsReport out;
  out.mean.id = "mean";
  out.stddev.id = "std";
  double const n = static_cast<double>(rows.size());
  if (rows.empty()) {
    out.rows = std::move(rows);
    return out;
  }
  for (auto const &r : rows) {
    out.mean.nmse += r.nmse / n;
    out.mean.psnr += r.psnr / n;
    out.mean.ssim += r.ssim / n;
  }
  if (rows.size() > 1) {
    for (auto const &r : rows) {
      out.stddev.nmse += (r.nmse - out.mean.nmse) * (r.nmse - out.mean.nmse);
      out.stddev.psnr += (r.psnr - out.mean.psnr) * (r.psnr - out.mean.psnr);
      out.stddev.ssim += (r.ssim - out.mean.ssim) * (r.ssim - out.mean.ssim);
    }
    out.stddev.nmse = std::sqrt(out.stddev.nmse / (n - 1.0));
    out.stddev.psnr = std::sqrt(out.stddev.psnr / (n - 1.0));
    out.stddev.ssim = std::sqrt(out.stddev.ssim / (n - 1.0));
  }
  out.rows = std::move(rows);
  return out;
}

std::string metrics_csv(MetricsReport const &report)
{
  std::string out = "sample_id,nmse,psnr,ssim\n";
  auto row = [&](SampleMetrics const &m) { out += fmt::format("{},{:.10g},{:.10g},{:.10g}\n", m.id, m.nmse, m.psnr, m.ssim); };
  for (auto const &r : report.rows) {
    row(r);
  }
  row(report.mean);
  row(report.stddev);
  return out;
}

} // namespace deqpocs
