#include "deqpocs/harness.hpp"

#include "deqpocs/deq_train.hpp"
#include "deqpocs/errors.hpp"
#include "deqpocs/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace deqpocs {

namespace {

ComplexTensor gaussian_like(ComplexTensor const &like, double target_norm, std::uint64_t seed)
{
  ComplexTensor n(like.shape());
  Rng rng(seed);
  for (auto &v : n.data()) {
    double const re = rng.normal();
    v = Cx(re, rng.normal());
  }
  double const cur = norm(n);
  if (cur > 0.0) {
    n *= target_norm / cur;
  }
  return n;
}

double certified_L(ConsistencyNetParams const &params)
{
  double const L = certified_lipschitz(params).L;
  if (!(L < 1.0)) {
    throw ConfigError(fmt::format("network certificate L = {} is not a contraction", L));
  }
  return L;
}

double max_pairwise(std::vector<ComplexTensor> const &xs)
{
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); i++) {
    for (std::size_t j = i + 1; j < xs.size(); j++) {
      worst = std::max(worst, distance(xs[i], xs[j]));
    }
  }
  return worst;
}

double solution_scale(std::vector<ComplexTensor> const &xs)
{
  double s = 1.0;
  for (auto const &x : xs) {
    s = std::max(s, norm(x));
  }
  return s;
}

} // namespace

std::string ConvergenceReport::csv() const
{
  std::string out = "sample,init,iterations,converged,rate_ok,final_residual\n";
  for (auto const &r : rows) {
    out += fmt::format("{},{},{},{},{},{:.17g}\n", r.sample, r.init, r.iterations, r.converged ? 1 : 0, r.rate_ok ? 1 : 0, r.final_residual);
  }
  return out;
}

ConvergenceReport verify_convergence(
  ConsistencyNetParams const &params,
  std::span<Measurement const> samples,
  int inits,
  double slack,
  SolverSettings const &settings,
  std::uint64_t seed)
{
  if (inits < 1) {
    throw ConfigError("verify_convergence needs at least one initialisation");
  }
  ConvergenceReport report;
  report.L = certified_L(params);
  report.slack = slack;
  report.tol = settings.tol;
  report.pass = true;
  for (std::size_t s = 0; s < samples.size(); s++) {
    Measurement const &meas = samples[s];
    double const ynorm = std::max(norm(meas.y), 1.0);
    std::vector<ComplexTensor> solutions;
    for (int i = 0; i < inits; i++) {
      ComplexTensor x0;
      std::string name;
      std::uint64_t const init_seed = derive_seed(seed, s * 1024 + i);
      if (i == 0) {
        x0 = meas.y;
        name = "y";
      } else if (i == 1) {
        x0 = ComplexTensor(meas.y.shape());
        name = "zero";
      } else if (i == 2) {
        x0 = gaussian_like(meas.y, 10.0 * ynorm, init_seed);
        name = "large-random";
      } else {
        x0 = gaussian_like(meas.y, ynorm, init_seed);
        name = fmt::format("random-{}", i - 2);
      }
      FixedPointResult const r = picard_solve(pocs_operator(params, meas.mask, meas.y), x0, settings);
      ConvergenceRow row;
      row.sample = static_cast<int>(s);
      row.init = name;
      row.iterations = r.iterations;
      row.converged = r.converged;
      row.rate_ok = geometric_rate_check(r.residuals, report.L, slack, residual_floor(r.solution));
      row.final_residual = r.residuals.empty() ? 0.0 : r.residuals.back();
      report.pass = report.pass && row.converged && row.rate_ok;
      report.rows.push_back(row);
      solutions.push_back(r.solution);
    }
    double const worst = max_pairwise(solutions);
    double const limit = 10.0 * settings.tol * solution_scale(solutions);
    report.max_pairwise.push_back(worst);
    report.agreement_limit.push_back(limit);
    report.pass = report.pass && worst <= limit;
  }
  return report;
}

std::string RobustnessReport::csv() const
{
  std::string out = "delta_rel,trial,delta,observed,bound,margin,recursion_ok\n";
  for (auto const &t : trials) {
    out += fmt::format(
      "{:.17g},{},{:.17g},{:.17g},{:.17g},{:.17g},{}\n",
      t.delta_rel, t.trial, t.delta, t.observed, t.bound, t.margin, t.recursion_ok ? 1 : 0);
  }
  return out;
}

RobustnessReport verify_robustness(
  ConsistencyNetParams const &params,
  Measurement const &meas,
  std::span<double const> delta_levels,
  int trials,
  std::uint64_t seed,
  SolverSettings const &settings)
{
  RobustnessReport report;
  report.L = certified_L(params);
  report.tol = settings.tol;
  report.all_within_bound = true;
  report.recursion_ok = true;
  double const L = report.L;

  FixedPointResult const clean = reconstruct(params, meas, settings);
  Operator const T = pocs_operator(params, meas.mask, meas.y);
  int const sync_steps = std::max(clean.iterations, 5);

  int index = 0;
  for (double level : delta_levels) {
    for (int t = 0; t < trials; t++, index++) {
      Measurement const noisy = add_noise(meas, level, derive_seed(seed, static_cast<std::uint64_t>(index)));
      FixedPointResult const perturbed = reconstruct(params, noisy, settings);

      RobustnessTrial row;
      row.delta_rel = level;
      row.trial = t;
      row.delta = noisy.delta;
      row.observed = distance(perturbed.solution, clean.solution);
      double const scale = std::max({1.0, norm(clean.solution), norm(perturbed.solution)});
      row.bound = row.delta / (1.0 - L) + 20.0 * settings.tol * scale;
      row.margin = row.bound - row.observed;

      // ||x^d_k - x_k|| <= L ||x^d_{k-1} - x_{k-1}|| + delta from a shared x0
      Operator const Td = pocs_operator(params, noisy.mask, noisy.y);
      ComplexTensor a = meas.y;
      ComplexTensor b = meas.y;
      double prev = 0.0;
      row.recursion_ok = true;
      for (int k = 0; k < sync_steps; k++) {
        a = T(a);
        b = Td(b);
        double const d = distance(a, b);
        double const rounding = 1e-12 * std::max(1.0, norm(a));
        if (d > L * prev + row.delta + rounding) {
          row.recursion_ok = false;
        }
        prev = d;
      }

      report.all_within_bound = report.all_within_bound && row.margin >= -1e-6 * row.bound;
      report.recursion_ok = report.recursion_ok && row.recursion_ok;
      report.trials.push_back(row);
    }
  }
  return report;
}

std::string InitIndependenceReport::csv() const
{
  std::string out = "level,trial,distance,limit\n";
  for (auto const &r : rows) {
    out += fmt::format("{:.17g},{},{:.17g},{:.17g}\n", r.level, r.trial, r.distance, r.limit);
  }
  return out;
}

InitIndependenceReport verify_init_independence(
  ConsistencyNetParams const &params,
  Measurement const &meas,
  std::span<double const> levels,
  int trials,
  std::uint64_t seed,
  SolverSettings const &settings)
{
  certified_L(params);
  InitIndependenceReport report;
  std::vector<ComplexTensor> solutions{reconstruct(params, meas, settings).solution};
  std::vector<std::pair<double, int>> labels;
  double const ynorm = norm(meas.y);
  int index = 0;
  for (double level : levels) {
    for (int t = 0; t < trials; t++, index++) {
      ComplexTensor x0 = meas.y;
      if (level > 0.0) {
        x0 += gaussian_like(meas.y, level * ynorm, derive_seed(seed, static_cast<std::uint64_t>(index)));
      }
      solutions.push_back(reconstruct(params, meas, settings, x0).solution);
      labels.emplace_back(level, t);
    }
  }
  report.limit = 10.0 * settings.tol * solution_scale(solutions);
  for (std::size_t i = 0; i < labels.size(); i++) {
    report.rows.push_back({labels[i].first, labels[i].second, distance(solutions[i + 1], solutions[0]), report.limit});
  }
  report.max_pairwise = max_pairwise(solutions);
  report.pass = report.max_pairwise <= report.limit;
  return report;
}

MaskTransferReport verify_mask_transfer(
  ConsistencyNetParams const &params, std::span<DatasetEntry const> test_set, SolverSettings const &settings)
{
  std::vector<SampleMetrics> recon_rows;
  std::vector<SampleMetrics> zf_rows;
  MaskTransferReport report;
  report.beats_zero_fill = !test_set.empty();
  for (std::size_t i = 0; i < test_set.size(); i++) {
    DatasetEntry const &e = test_set[i];
    std::string const id = sample_stem(static_cast<int>(i));
    FixedPointResult const r = reconstruct(params, e.meas, settings);
    recon_rows.push_back(evaluate_kspace(id, r.solution, e.sample.full));
    zf_rows.push_back(evaluate_kspace(id, e.meas.y, e.sample.full));
    report.beats_zero_fill = report.beats_zero_fill && recon_rows.back().psnr > zf_rows.back().psnr;
  }
  report.recon = summarize(std::move(recon_rows));
  report.zero_fill = summarize(std::move(zf_rows));
  return report;
}

} // namespace deqpocs
