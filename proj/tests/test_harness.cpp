#include "oracles.hpp"

#include "deqpocs/deq_train.hpp"
#include "deqpocs/errors.hpp"
#include "deqpocs/harness.hpp"

#include <doctest.h>

#include <cmath>

using namespace deqpocs;

namespace {

std::vector<DatasetEntry> tiny_set(int n, MaskKind kind, double accel, std::uint64_t seed)
{
  DatasetSpec spec;
  spec.count = n;
  spec.height = 16;
  spec.width = 16;
  spec.coils = 2;
  spec.mask.kind = kind;
  spec.mask.accel = accel;
  spec.seed = seed;
  return make_dataset(spec);
}

std::vector<Measurement> measurements(std::vector<DatasetEntry> const &set)
{
  std::vector<Measurement> out;
  for (auto const &e : set) {
    out.push_back(e.meas);
  }
  return out;
}

} // namespace

TEST_CASE("convergence harness passes on a fresh certified net")
{
  auto const p = init_params(Variant::KSpace, 2, 4, 2, 1, {16, 16});
  auto const meas = measurements(tiny_set(2, MaskKind::Calibrated1D, 4.0, 2));
  auto const rep = verify_convergence(p, meas, 4, 1.05, SolverSettings::picard(1e-5, 5000), 3);
  CHECK(rep.pass);
  CHECK(rep.L == certified_lipschitz(p).L);
  REQUIRE(rep.rows.size() == 8u);
  CHECK(rep.rows[0].init == "y");
  CHECK(rep.rows[1].init == "zero");
  for (auto const &r : rep.rows) {
    CHECK(r.converged);
    CHECK(r.rate_ok);
  }
  for (std::size_t s = 0; s < rep.max_pairwise.size(); s++) {
    CHECK(rep.max_pairwise[s] <= rep.agreement_limit[s]);
  }
  CHECK(rep.csv().find("sample,init") == 0);
}

TEST_CASE("alpha = 0 contracts at exactly 0.99 per block")
{
  auto p = init_params(Variant::KSpace, 2, 4, 2, 4, {16, 16});
  for (auto &b : p.blocks) {
    b.alpha = 0.0;
  }
  CHECK(certified_lipschitz(p).L == doctest::Approx(0.9801).epsilon(1e-15));
  auto const meas = measurements(tiny_set(1, MaskKind::Calibrated1D, 4.0, 5));
  // only the rate is checked here: at L = 0.9801 a tolerance-stopped run may sit
  // up to about 49 tol from the fixed point, beyond the 10 tol agreement limit
  auto const rep = verify_convergence(p, meas, 3, 1.0 + 1e-9, SolverSettings::picard(1e-6, 5000), 6);
  for (auto const &row : rep.rows) {
    CHECK(row.converged);
    CHECK(row.rate_ok);
  }
  // after the first projection the missing entries shrink by exactly 0.9801
  auto const r = reconstruct(p, meas[0], SolverSettings::picard(1e-8, 5000), oracle::random_tensor(16, 16, 2, 7));
  for (std::size_t k = 2; k < 20; k++) {
    CHECK(r.residuals[k] / r.residuals[k - 1] == doctest::Approx(0.9801).epsilon(1e-9));
  }
}

TEST_CASE("robustness bound and proof recursion")
{
  auto const p = init_params(Variant::Hybrid, 1, 4, 2, 8, {16, 16});
  auto const set = tiny_set(1, MaskKind::Calibrated2D, 3.0, 9);
  std::vector<double> const levels{0.0, 0.01, 0.1};
  SolverSettings const s = SolverSettings::anderson(1e-6, 300);
  auto const rep = verify_robustness(p, set[0].meas, levels, 3, 10, s);
  CHECK(rep.all_within_bound);
  CHECK(rep.recursion_ok);
  REQUIRE(rep.trials.size() == 9u);
  double const scale = std::max(1.0, norm(set[0].meas.y));
  for (auto const &t : rep.trials) {
    CHECK(t.margin == doctest::Approx(t.bound - t.observed));
    CHECK(t.observed <= t.bound);
    CHECK(t.recursion_ok);
    if (t.delta_rel == 0.0) {
      CHECK(t.delta == 0.0);
      CHECK(t.observed <= 10 * 1e-6 * scale * 2);
    } else {
      CHECK(std::abs(t.delta - t.delta_rel * norm(set[0].meas.y)) < 1e-9 * norm(set[0].meas.y));
    }
  }
  CHECK(rep.csv().find("delta_rel") == 0);
}

TEST_CASE("initial value independence")
{
  auto const p = init_params(Variant::KSpace, 2, 4, 2, 11, {16, 16});
  auto const set = tiny_set(1, MaskKind::Calibrated1D, 4.0, 12);
  std::vector<double> const levels{0.0, 0.5, 2.0};
  auto const rep = verify_init_independence(p, set[0].meas, levels, 2, 13, SolverSettings::anderson(1e-6, 300));
  CHECK(rep.pass);
  CHECK(rep.max_pairwise <= rep.limit);
  REQUIRE(rep.rows.size() == 6u);
  for (auto const &r : rep.rows) {
    CHECK(r.distance <= r.limit);
  }
}

TEST_CASE("mask transfer report on unseen free masks")
{
  auto const p = init_params(Variant::KSpace, 1, 4, 2, 14, {16, 16});
  auto const set = tiny_set(3, MaskKind::Free2D, 10.0, 15);
  auto const rep = verify_mask_transfer(p, set, SolverSettings::anderson(1e-5, 200));
  REQUIRE(rep.recon.rows.size() == 3u);
  REQUIRE(rep.zero_fill.rows.size() == 3u);
  for (auto const *m : {&rep.recon, &rep.zero_fill}) {
    for (auto const &r : m->rows) {
      CHECK(std::isfinite(r.nmse));
      CHECK(std::isfinite(r.psnr));
      CHECK(std::isfinite(r.ssim));
    }
    CHECK(std::isfinite(m->mean.psnr));
  }
}

TEST_CASE("harness refuses an uncertified net")
{
  auto p = init_params(Variant::KSpace, 1, 4, 2, 16, {16, 16});
  for (auto &k : p.blocks[0].kspace.kernels) {
    for (auto &t : k.taps()) {
      t *= 50.0;
    }
  }
  p.blocks[0].alpha = 0.99;
  recertify(p, {16, 16});
  REQUIRE(certified_lipschitz(p).L > 1.0);
  auto const meas = measurements(tiny_set(1, MaskKind::Calibrated1D, 4.0, 17));
  CHECK_THROWS_AS(verify_convergence(p, meas, 3, 1.05, SolverSettings::picard(), 1), ConfigError);
}
