#include "oracles.hpp"

#include "deqpocs/conv.hpp"
#include "deqpocs/errors.hpp"
#include "deqpocs/metrics.hpp"
#include "deqpocs/phantom.hpp"
#include "deqpocs/spirit.hpp"

#include <doctest.h>

#include <sstream>

using namespace deqpocs;

TEST_CASE("calibration matches the dense ridge solve")
{
  ComplexTensor const acs = oracle::random_tensor(24, 24, 3, 1);
  double const lambda_rel = 1e-2;
  auto const sk = calibrate_kernels(acs, 5, lambda_rel);
  double const lambda = oracle::dense_lambda(acs, 5, lambda_rel);
  CHECK(std::abs(sk.lambda - lambda) <= 1e-10 * lambda);
  for (int i = 0; i < 3; i++) {
    auto const d = oracle::dense_problem(acs, 5, i);
    Eigen::VectorXcd const expected = oracle::dense_solve(d, lambda);
    Eigen::VectorXcd const got = oracle::taps_of(sk, d, i);
    CHECK((got - expected).norm() <= 1e-6 * expected.norm());
    CHECK(sk.kernel(2, 2, i, i) == Cx{});
    // normal equations: A^H (t - A w) = lambda w
    Eigen::VectorXcd const res = d.A.adjoint() * (d.t - d.A * got) - lambda * got;
    CHECK(res.norm() <= 1e-6 * (d.A.adjoint() * d.t).norm());
  }
}

TEST_CASE("calibration is a local minimum of the ridge objective")
{
  ComplexTensor const acs = oracle::random_tensor(12, 12, 2, 2);
  auto const sk = calibrate_kernels(acs, 3, 1e-2);
  Rng rng(3);
  for (int i = 0; i < 2; i++) {
    auto const d = oracle::dense_problem(acs, 3, i);
    Eigen::VectorXcd const w = oracle::taps_of(sk, d, i);
    auto objective = [&](Eigen::VectorXcd const &v) {
      return (d.t - d.A * v).squaredNorm() + sk.lambda * v.squaredNorm();
    };
    double const best = objective(w);
    for (int trial = 0; trial < 20; trial++) {
      Eigen::VectorXcd p = w;
      auto const j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(w.size())));
      for (double step : {1e-3, -1e-3}) {
        p(j) = w(j) + (trial % 2 ? Cx(0.0, step) : Cx(step, 0.0));
        CHECK(objective(p) >= best);
      }
    }
  }
}

TEST_CASE("shifted coil pair recovers a unit tap")
{
  ComplexTensor const acs = oracle::shifted_pair(24, 24, 4);
  auto const sk = calibrate_kernels(acs, 5, 1e-8);
  for (int a = 0; a < 5; a++) {
    for (int b = 0; b < 5; b++) {
      for (int n = 0; n < 2; n++) {
        // coil 2 from coil 1 at column offset +1, coil 1 from coil 2 at -1
        Cx const want1 = (n == 0 && a == 2 && b == 3) ? Cx(1.0) : Cx{};
        Cx const want0 = (n == 1 && a == 2 && b == 1) ? Cx(1.0) : Cx{};
        CHECK(std::abs(sk.kernel(a, b, n, 1) - want1) < 1e-4);
        CHECK(std::abs(sk.kernel(a, b, n, 0) - want0) < 1e-4);
      }
    }
  }

  ComplexTensor const x = oracle::shifted_pair(16, 16, 5);
  ComplexTensor const pred = spirit_apply(sk, x);
  for (int h = 2; h < 14; h++) {
    for (int w = 2; w < 14; w++) {
      CHECK(std::abs(pred(h, w, 1) - x(h, w, 1)) < 1e-4);
      CHECK(std::abs(pred(h, w, 0) - x(h, w, 0)) < 1e-4);
    }
  }
}

TEST_CASE("POCS with exact kernels fills alternate columns")
{
  int const n = 16;
  ComplexTensor const full = oracle::shifted_pair(n, n, 6);
  std::vector<std::uint8_t> grid(n * n, 0);
  for (int h = 0; h < n; h++) {
    for (int w = 0; w < n; w += 2) {
      grid[h * n + w] = 1;
    }
  }
  SamplingMask const mask(n, n, grid, MaskKind::Calibrated1D, 2.0, AcsSpec::lines(2));
  SpiritKernels sk;
  sk.kernel = ConvKernel(3, 3, 2, 2);
  sk.kernel(1, 2, 0, 1) = 1.0;
  sk.kernel(1, 0, 1, 0) = 1.0;
  auto const r = spirit_pocs_recon(sk, apply_sampling(full, mask), 50, 1e-10);
  double err = 0.0;
  double ref = 0.0;
  for (int h = 0; h < n; h++) {
    for (int w = 2; w < n - 2; w++) {
      for (int c = 0; c < 2; c++) {
        err += std::norm(r.solution(h, w, c) - full(h, w, c));
        ref += std::norm(full(h, w, c));
      }
    }
  }
  CHECK(std::sqrt(err / ref) <= 1e-3);
}

TEST_CASE("zero data and zero kernels")
{
  auto const sk = calibrate_kernels(ComplexTensor(8, 8, 2), 3, 1e-2);
  for (auto v : sk.kernel.taps()) {
    CHECK(v == Cx{});
  }
  CHECK(norm(spirit_apply(sk, oracle::random_tensor(6, 6, 2, 1))) == 0.0);
}

TEST_CASE("spirit_apply is linear and its norm matches the dense SVD")
{
  auto const sk = calibrate_kernels(oracle::random_tensor(10, 10, 2, 7), 3, 1e-2);
  ComplexTensor const a = oracle::random_tensor(8, 8, 2, 8);
  ComplexTensor const b = oracle::random_tensor(8, 8, 2, 9);
  ComplexTensor lhs = spirit_apply(sk, 2.0 * a + b);
  ComplexTensor rhs = 2.0 * spirit_apply(sk, a) + spirit_apply(sk, b);
  CHECK(oracle::rel_err(lhs, rhs) < 1e-6);

  auto const M = oracle::materialize([&](ComplexTensor const &x) { return spirit_apply(sk, x); }, {6, 6, 2});
  CHECK(std::abs(spirit_operator_norm(sk, {6, 6}, 200) - oracle::largest_singular_value(M)) <
        1e-3 * oracle::largest_singular_value(M));
}

TEST_CASE("SPIRiT POCS beats zero filling on a phantom")
{
  // 32x32 leaves too few random lines outside a usable ACS for a 5x5 kernel
  for (std::uint64_t i = 1; i <= 4; i++) {
    auto const s = make_sample(48, 48, 4, 100 + i, 200 + i);
    auto const mask = make_mask(MaskKind::Calibrated1D, 48, 48, 2.0, AcsSpec::lines(12), 300 + i);
    auto const meas = apply_sampling(s.full, mask);
    auto const sk = calibrate_kernels(extract_acs(meas.y, mask), 5, 1e-2);
    auto const r = spirit_pocs_recon(sk, meas, 30);
    CHECK(psnr(ssos_image(r.solution), s.reference) > psnr(ssos_image(meas.y), s.reference));

    if (i == 1) {
      auto const all = make_mask(MaskKind::Calibrated1D, 48, 48, 1.0, AcsSpec::lines(12), 1);
      CHECK(spirit_pocs_recon(sk, apply_sampling(s.full, all), 5).solution == s.full);
    }
  }
}

TEST_CASE("ACS extraction and errors")
{
  auto const mask = make_mask(MaskKind::Calibrated2D, 16, 16, 2.0, AcsSpec::region(6, 4), 1);
  ComplexTensor const y = apply_sampling(oracle::random_tensor(16, 16, 2, 1), mask).y;
  ComplexTensor const acs = extract_acs(y, mask);
  CHECK(acs.height() == 6);
  CHECK(acs.width() == 4);
  CHECK(acs(0, 0, 1) == y(mask.acs_row0(), mask.acs_col0(), 1));

  auto const free = make_mask(MaskKind::Free2D, 16, 16, 2.0, {}, 1);
  CHECK_THROWS_AS(extract_acs(y, free), ConfigError);
  CHECK_THROWS_AS(calibrate_kernels(acs, 5), ConfigError);
  CHECK_THROWS_AS(calibrate_kernels(acs, 2), ConfigError);
}

TEST_CASE("SP01 round trip")
{
  auto const sk = calibrate_kernels(oracle::random_tensor(10, 10, 2, 3), 3, 1e-2);
  std::stringstream ss;
  write_sp01(ss, sk);
  CHECK(ss.str().substr(0, 4) == "SP01");
  auto const back = read_sp01(ss);
  CHECK(back.size() == 3);
  CHECK(back.coils() == 2);
  for (std::size_t i = 0; i < sk.kernel.taps().size(); i++) {
    CHECK(std::abs(back.kernel.taps()[i] - sk.kernel.taps()[i]) <= 1e-6 * std::abs(sk.kernel.taps()[i]) + 1e-30);
  }
}
