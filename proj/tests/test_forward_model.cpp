#include "oracles.hpp"

#include "deqpocs/errors.hpp"
#include "deqpocs/forward_model.hpp"

#include <doctest.h>

#include <sstream>

using namespace deqpocs;

namespace {

SamplingMask single_point_mask(int h, int w, int ph, int pw)
{
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(h) * w, 0);
  grid[static_cast<std::size_t>(ph) * w + pw] = 1;
  return SamplingMask(h, w, std::move(grid), MaskKind::Free2D, 1.0, {});
}

std::size_t nonzeros(ComplexTensor const &x)
{
  std::size_t n = 0;
  for (auto v : x.data()) {
    n += v != Cx{};
  }
  return n;
}

} // namespace

TEST_CASE("mask kind names round trip")
{
  for (auto k : {MaskKind::Calibrated1D, MaskKind::Calibrated2D, MaskKind::Free1D, MaskKind::Free2D}) {
    CHECK(parse_mask_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_mask_kind("poisson"), ConfigError);
}

TEST_CASE("default ACS scales with the grid")
{
  CHECK(default_acs(MaskKind::Calibrated1D, 384, 384) == AcsSpec::lines(16));
  CHECK(default_acs(MaskKind::Calibrated1D, 32, 32) == AcsSpec::lines(2));
  CHECK(default_acs(MaskKind::Calibrated2D, 32, 32) == AcsSpec::region(6, 6));
  CHECK(default_acs(MaskKind::Free2D, 32, 32).empty());
}

TEST_CASE("R = 1 samples everything")
{
  auto const m = make_mask(MaskKind::Calibrated1D, 32, 32, 1.0, AcsSpec::lines(4), 3);
  CHECK(m.count() == 32u * 32u);
}

TEST_CASE("2-D free mask at R = 4")
{
  auto const m = make_mask(MaskKind::Free2D, 32, 32, 4.0, {}, 7);
  CHECK(m.count() >= 230u);
  CHECK(m.count() <= 282u);
  CHECK(make_mask(MaskKind::Free2D, 32, 32, 4.0, {}, 7) == m);
  CHECK_FALSE(make_mask(MaskKind::Free2D, 32, 32, 4.0, {}, 8) == m);
}

TEST_CASE("1-D calibrated mask at full scale keeps the central lines")
{
  auto const m = make_mask(MaskKind::Calibrated1D, 384, 384, 4.0, AcsSpec::lines(16), 11);
  CHECK(m.fraction() >= 0.225);
  CHECK(m.fraction() <= 0.275);
  for (int c = 192 - 8; c < 192 + 8; c++) {
    for (int h = 0; h < 384; h += 17) {
      CHECK(m(h, c));
    }
  }
  // whole columns
  for (int c = 0; c < 384; c++) {
    for (int h = 1; h < 384; h++) {
      REQUIRE(m(h, c) == m(0, c));
    }
  }
}

TEST_CASE("2-D calibrated mask contains its ACS block")
{
  auto const m = make_mask(MaskKind::Calibrated2D, 32, 32, 4.0, {}, 5);
  REQUIRE(m.acs_rows() == 6);
  REQUIRE(m.acs_cols() == 6);
  for (int h = m.acs_row0(); h < m.acs_row0() + 6; h++) {
    for (int w = m.acs_col0(); w < m.acs_col0() + 6; w++) {
      CHECK(m(h, w));
    }
  }
  CHECK(std::abs(m.fraction() - 0.25) <= 0.025);
}

TEST_CASE("mask errors")
{
  CHECK_THROWS_AS(make_mask(MaskKind::Free2D, 32, 32, 0.5, {}, 1), ConfigError);
  CHECK_THROWS_AS(make_mask(MaskKind::Calibrated1D, 32, 32, 8.0, AcsSpec::lines(16), 1), ConfigError);
  CHECK_THROWS_AS(make_mask(MaskKind::Calibrated2D, 16, 16, 2.0, AcsSpec::region(20, 4), 1), ConfigError);
}

TEST_CASE("sampling keeps the masked entries")
{
  ComplexTensor const x = oracle::random_tensor(16, 16, 3, 1);
  auto const all = make_mask(MaskKind::Free2D, 16, 16, 1.0, {}, 1);
  CHECK(apply_sampling(x, all).y == x);

  auto const one = single_point_mask(16, 16, 4, 9);
  auto const m1 = apply_sampling(x, one);
  CHECK(nonzeros(m1.y) == 3u);
  CHECK(m1.y(4, 9, 2) == x(4, 9, 2));

  auto const mask = make_mask(MaskKind::Calibrated1D, 16, 16, 4.0, {}, 2);
  auto const m = apply_sampling(x, mask);
  CHECK(norm(m.y) <= norm(x));
  CHECK(apply_sampling(m.y, mask).y == m.y);
  CHECK(m.delta == 0.0);
  for (int h = 0; h < 16; h++) {
    for (int w = 0; w < 16; w++) {
      for (int c = 0; c < 3; c++) {
        CHECK(m.y(h, w, c) == (mask(h, w) ? x(h, w, c) : Cx{}));
      }
    }
  }
  CHECK_THROWS_AS(apply_sampling(oracle::random_tensor(8, 16, 3, 1), mask), ShapeError);
}

TEST_CASE("noise has the requested norm and stays on the mask")
{
  ComplexTensor const x = oracle::random_tensor(16, 16, 2, 3);
  auto const mask = make_mask(MaskKind::Free2D, 16, 16, 3.0, {}, 4);
  auto const m = apply_sampling(x, mask);

  auto const same = add_noise(m, 0.0, 1);
  CHECK(same.y == m.y);
  CHECK(same.delta == 0.0);

  auto const n = add_noise(m, 0.01, 9);
  CHECK(std::abs(distance(n.y, m.y) / norm(m.y) - 0.01) < 1e-6);
  CHECK(std::abs(n.delta - 0.01 * norm(m.y)) < 1e-12);
  for (int h = 0; h < 16; h++) {
    for (int w = 0; w < 16; w++) {
      if (!mask(h, w)) {
        CHECK(n.y(h, w, 0) == Cx{});
        CHECK(n.y(h, w, 1) == Cx{});
      }
    }
  }
  CHECK(add_noise(m, 0.01, 9).y == n.y);
  CHECK_FALSE(add_noise(m, 0.01, 10).y == n.y);
}

TEST_CASE("data consistency projection")
{
  ComplexTensor const x = oracle::random_tensor(16, 16, 2, 5);
  ComplexTensor const full = oracle::random_tensor(16, 16, 2, 6);

  auto const all = make_mask(MaskKind::Free2D, 16, 16, 1.0, {}, 1);
  auto const ya = apply_sampling(full, all).y;
  CHECK(project_data_consistency(x, all, ya) == ya);

  auto const none = SamplingMask(16, 16, std::vector<std::uint8_t>(256, 0), MaskKind::Free2D, 1.0, {});
  CHECK(project_data_consistency(x, none, ComplexTensor(16, 16, 2)) == x);

  auto const mask = make_mask(MaskKind::Calibrated1D, 16, 16, 4.0, {}, 7);
  auto const y = apply_sampling(full, mask).y;
  ComplexTensor const p = project_data_consistency(x, mask, y);
  CHECK(project_data_consistency(p, mask, y) == p);
  for (int t = 0; t < 100; t++) {
    ComplexTensor const a = oracle::random_tensor(16, 16, 2, 100 + 2 * t);
    ComplexTensor const b = oracle::random_tensor(16, 16, 2, 101 + 2 * t);
    CHECK(distance(project_data_consistency(a, mask, y), project_data_consistency(b, mask, y)) <=
          distance(a, b) * (1 + 1e-6));
  }

  ComplexTensor v = x;
  zero_sampled(v, mask);
  CHECK(v == project_data_consistency(x, mask, ComplexTensor(16, 16, 2)));
}

TEST_CASE("MK01 round trip and layout")
{
  auto const mask = make_mask(MaskKind::Calibrated2D, 12, 10, 2.0, AcsSpec::region(4, 2), 3);
  std::stringstream ss;
  write_mk01(ss, mask);
  std::string const bytes = ss.str();
  CHECK(bytes.size() == 4 + 8 + 120 + 1 + 4 + 4);
  CHECK(bytes.substr(0, 4) == "MK01");
  CHECK(static_cast<unsigned char>(bytes[4]) == 12);
  CHECK(static_cast<unsigned char>(bytes[8]) == 10);
  CHECK(read_mk01(ss) == mask);

  std::stringstream bad("MK02");
  CHECK_THROWS_AS(read_mk01(bad), IoError);
}
