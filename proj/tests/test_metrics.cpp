#include "oracles.hpp"

#include "deqpocs/errors.hpp"
#include "deqpocs/fft.hpp"
#include "deqpocs/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace deqpocs;

namespace {

RealImage random_image(int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0)
{
  RealImage img(h, w);
  Rng rng(seed);
  for (auto &v : img.data()) {
    v = rng.uniform(lo, hi);
  }
  return img;
}

} // namespace

TEST_CASE("ssos")
{
  ComplexTensor one = oracle::random_tensor(5, 5, 1, 1);
  RealImage const z1 = ssos(one);
  for (int h = 0; h < 5; h++) {
    for (int w = 0; w < 5; w++) {
      CHECK(z1(h, w) == doctest::Approx(std::abs(one(h, w, 0))).epsilon(1e-14));
    }
  }

  ComplexTensor two(4, 4, 2);
  for (int h = 0; h < 4; h++) {
    for (int w = 0; w < 4; w++) {
      two(h, w, 0) = std::polar(1.0, 0.3 * h + w);
      two(h, w, 1) = two(h, w, 0);
    }
  }
  RealImage const z2 = ssos(two);
  for (double v : z2.data()) {
    CHECK(std::abs(v - std::sqrt(2.0)) < 1e-12);
  }

  ComplexTensor const x = oracle::random_tensor(8, 8, 3, 2);
  RealImage const z = ssos(x);
  for (int h = 0; h < 8; h++) {
    for (int w = 0; w < 8; w++) {
      double s = 0.0;
      for (int c = 0; c < 3; c++) {
        s += x(h, w, c).real() * x(h, w, c).real() + x(h, w, c).imag() * x(h, w, c).imag();
      }
      CHECK(std::abs(z(h, w) - std::sqrt(s)) < 1e-6);
    }
  }

  ComplexTensor const k = oracle::random_tensor(8, 8, 2, 3);
  CHECK(ssos_image(k) == ssos(ifft2_centered(k)));
}

TEST_CASE("psnr")
{
  RealImage const ref = random_image(10, 10, 4);
  CHECK(psnr(ref, ref) == kPsnrCap);

  RealImage ones(10, 10, 1.0);
  RealImage hole = ones;
  hole(3, 4) = 0.0;
  CHECK(std::abs(psnr(hole, ones) - 20.0) < 1e-12);

  RealImage const test = random_image(10, 10, 5);
  double peak = 0.0;
  double mse = 0.0;
  for (int h = 0; h < 10; h++) {
    for (int w = 0; w < 10; w++) {
      peak = std::max(peak, ref(h, w));
      mse += (test(h, w) - ref(h, w)) * (test(h, w) - ref(h, w));
    }
  }
  mse /= 100.0;
  CHECK(std::abs(psnr(test, ref) - 10.0 * std::log10(peak * peak / mse)) < 1e-6);

  // closer images score higher
  RealImage mid = test;
  for (std::size_t i = 0; i < mid.size(); i++) {
    mid.data()[i] = 0.5 * (test.data()[i] + ref.data()[i]);
  }
  CHECK(psnr(mid, ref) > psnr(test, ref));

  CHECK_THROWS_AS(psnr(RealImage(9, 10), ref), ShapeError);
}

TEST_CASE("nmse")
{
  RealImage const ref = random_image(12, 9, 6);
  CHECK(nmse(ref, ref) == 0.0);
  RealImage twice = ref;
  for (auto &v : twice.data()) {
    v *= 2.0;
  }
  CHECK(std::abs(nmse(twice, ref) - 1.0) < 1e-14);

  RealImage const test = random_image(12, 9, 7);
  double num = 0.0;
  double den = 0.0;
  for (int h = 0; h < 12; h++) {
    for (int w = 0; w < 9; w++) {
      num += (test(h, w) - ref(h, w)) * (test(h, w) - ref(h, w));
      den += ref(h, w) * ref(h, w);
    }
  }
  CHECK(std::abs(nmse(test, ref) - num / den) < 1e-9);
}

TEST_CASE("ssim")
{
  RealImage const ref = random_image(16, 16, 8);
  CHECK(std::abs(ssim(ref, ref) - 1.0) < 1e-9);

  double lo = 1.0;
  double hi = 0.0;
  for (double v : ref.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  RealImage shifted = ref;
  for (auto &v : shifted.data()) {
    v += 0.5 * (hi - lo);
  }
  CHECK(ssim(shifted, ref) < 1.0);

  RealImage const test = random_image(16, 16, 9);
  CHECK(std::abs(ssim(test, ref) - oracle::ssim_filtered(test, ref)) < 1e-6);
  RealImage const smooth = random_image(20, 13, 10, 0.2, 0.4);
  RealImage const other = random_image(20, 13, 11, 0.1, 0.6);
  CHECK(std::abs(ssim(other, smooth) - oracle::ssim_filtered(other, smooth)) < 1e-6);

  CHECK_THROWS_AS(ssim(RealImage(10, 10), RealImage(10, 10)), ShapeError);
}

TEST_CASE("summary rows and CSV")
{
  std::vector<SampleMetrics> rows{{"a", 0.1, 20.0, 0.8}, {"b", 0.3, 24.0, 0.9}};
  auto const rep = summarize(rows);
  CHECK(rep.mean.psnr == doctest::Approx(22.0));
  CHECK(rep.mean.nmse == doctest::Approx(0.2));
  // sample standard deviation
  CHECK(rep.stddev.psnr == doctest::Approx(std::sqrt(8.0)));
  std::string const csv = metrics_csv(rep);
  CHECK(csv.rfind("sample_id,nmse,psnr,ssim\n", 0) == 0);
  CHECK(csv.find("\na,") != std::string::npos);
  CHECK(csv.find("\nmean,") != std::string::npos);
  CHECK(csv.find("\nstd,") != std::string::npos);

  ComplexTensor const k = oracle::random_tensor(12, 12, 2, 12);
  auto const m = evaluate_kspace("s", k, k);
  CHECK(m.id == "s");
  CHECK(m.nmse == 0.0);
  CHECK(m.psnr == kPsnrCap);
  CHECK(std::abs(m.ssim - 1.0) < 1e-9);
}
