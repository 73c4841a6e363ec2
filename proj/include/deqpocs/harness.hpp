#pragma once

#include "consistency_net.hpp"
#include "fixed_point.hpp"
#include "forward_model.hpp"
#include "metrics.hpp"
#include "phantom.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace deqpocs {

/*
 * Empirical checks of the contraction theory on a certified network.
 *
 * Solver slack: a run stopped at relative residual r <= tol * s, with
 * s = max(1, ||x||), is within r L/(1 - L) of the true fixed point, so two
 * stopped runs of a moderately contractive map agree to a few tol * s. The
 * harness allows 10 tol * s for agreement between runs and 20 tol * s on top
 * of the delta / (1 - L) robustness bound.
 */

struct ConvergenceRow
{
  int sample = 0;
  std::string init;
  int iterations = 0;
  bool converged = false;
  bool rate_ok = false;
  double final_residual = 0.0;
};

struct ConvergenceReport
{
  double L = 0.0;
  double slack = 0.0;
  double tol = 0.0;
  std::vector<ConvergenceRow> rows;
  std::vector<double> max_pairwise; // per sample, Frobenius
  std::vector<double> agreement_limit;
  bool pass = false;
  std::string csv() const;
};

// Inits per sample: y, 0, large-norm random, then further random draws.
ConvergenceReport verify_convergence(
  ConsistencyNetParams const &params,
  std::span<Measurement const> samples,
  int inits,
  double slack,
  SolverSettings const &settings,
  std::uint64_t seed);

struct RobustnessTrial
{
  double delta_rel = 0.0;
  int trial = 0;
  double delta = 0.0;
  double observed = 0.0; // ||x_fp^delta - x_fp||
  double bound = 0.0;    // delta / (1 - L) + 20 tol s
  double margin = 0.0;   // bound - observed
  bool recursion_ok = false;
};

struct RobustnessReport
{
  double L = 0.0;
  double tol = 0.0;
  std::vector<RobustnessTrial> trials;
  bool all_within_bound = false;
  bool recursion_ok = false;
  std::string csv() const;
};

RobustnessReport verify_robustness(
  ConsistencyNetParams const &params,
  Measurement const &meas,
  std::span<double const> delta_levels,
  int trials,
  std::uint64_t seed,
  SolverSettings const &settings);

struct InitIndependenceRow
{
  double level = 0.0;
  int trial = 0;
  double distance = 0.0;
  double limit = 0.0;
};

struct InitIndependenceReport
{
  std::vector<InitIndependenceRow> rows; // distance to the x0 = y reconstruction
  double max_pairwise = 0.0;             // over all reconstructions
  double limit = 0.0;
  bool pass = false;
  std::string csv() const;
};

// Reconstructions from x0 = y and x0 = y + n with ||n|| = level ||y||.
InitIndependenceReport verify_init_independence(
  ConsistencyNetParams const &params,
  Measurement const &meas,
  std::span<double const> levels,
  int trials,
  std::uint64_t seed,
  SolverSettings const &settings);

struct MaskTransferReport
{
  MetricsReport recon;
  MetricsReport zero_fill;
  bool beats_zero_fill = false; // PSNR above zero-fill on every sample
};

MaskTransferReport verify_mask_transfer(
  ConsistencyNetParams const &params, std::span<DatasetEntry const> test_set, SolverSettings const &settings);

} // namespace deqpocs
