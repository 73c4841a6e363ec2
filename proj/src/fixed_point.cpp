#include "deqpocs/fixed_point.hpp"

#include "deqpocs/errors.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace deqpocs {

std::string_view to_string(SolverMethod m) { return m == SolverMethod::Anderson ? "anderson" : "picard"; }

SolverSettings SolverSettings::picard(double tol, int max_iter)
{
  SolverSettings s;
  s.method = SolverMethod::Picard;
  s.tol = tol;
  s.max_iter = max_iter;
  return s;
}

SolverSettings SolverSettings::anderson(double tol, int max_iter)
{
  SolverSettings s;
  s.method = SolverMethod::Anderson;
  s.tol = tol;
  s.max_iter = max_iter;
  return s;
}

namespace {

using Clock = std::chrono::steady_clock;

void validate(SolverSettings const &s)
{
  if (!(s.tol > 0.0)) {
    throw ConfigError("solver tolerance must be > 0");
  }
  if (s.max_iter < 1 && s.fixed_iterations < 1) {
    throw ConfigError("solver max_iter must be >= 1");
  }
  if (s.method == SolverMethod::Anderson) {
    if (s.memory < 1) {
      throw ConfigError("Anderson memory must be >= 1");
    }
    if (!(s.damping > 0.0 && s.damping <= 1.0)) {
      throw ConfigError("Anderson damping must lie in (0, 1]");
    }
    if (!(s.ridge >= 0.0)) {
      throw ConfigError("Anderson ridge must be >= 0");
    }
  }
}

int step_budget(SolverSettings const &s) { return s.fixed_iterations > 0 ? s.fixed_iterations : s.max_iter; }

// Shared bookkeeping for both solvers: residual history, stopping rule,
// divergence watchdog and best-iterate tracking.
class Tracker
{
public:
  Tracker(SolverSettings const &s, SolverMethod method)
    : settings_(s)
    , start_(Clock::now())
  {
    result_.tol = s.tol;
    result_.method = method;
  }

  // Records residual ||fx - x|| with fx = T(x). Returns true when the solve
  // should stop; the result then already holds the returned iterate.
  bool record(ComplexTensor const &x, ComplexTensor const &fx)
  {
    int const k = result_.iterations;
    if (!all_finite(fx)) {
      if (settings_.divergence_window > 0 && !best_.empty()) {
        finish_with_best();
        return true;
      }
      throw DivergenceError("fixed-point iterate became non-finite at iteration " + std::to_string(k), k);
    }
    double const r = distance(fx, x);
    result_.residuals.push_back(r);
    result_.wall_ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - start_).count());
    result_.iterations = k + 1;

    double const scale = std::max(1.0, norm(fx));
    bool const small = r <= settings_.tol * scale;

    if (settings_.divergence_window > 0) {
      if (best_.empty() || r < best_r_) {
        best_ = fx;
        best_r_ = r;
      }
      rises_ = (k > 0 && r > result_.residuals[k - 1]) ? rises_ + 1 : 0;
      if (rises_ >= settings_.divergence_window) {
        finish_with_best();
        return true;
      }
    }

    bool const out_of_budget = result_.iterations >= step_budget(settings_);
    bool const stop = settings_.fixed_iterations > 0 ? out_of_budget : (small || out_of_budget);
    if (stop) {
      result_.solution = fx;
      result_.converged = small;
    }
    return stop;
  }

  FixedPointResult take() { return std::move(result_); }

private:
  void finish_with_best()
  {
    result_.solution = best_;
    result_.converged = false;
  }

  SolverSettings const &settings_;
  Clock::time_point start_;
  FixedPointResult result_;
  ComplexTensor best_;
  double best_r_ = std::numeric_limits<double>::infinity();
  int rises_ = 0;
};

} // namespace

FixedPointResult picard_solve(Operator const &T, ComplexTensor const &x0, SolverSettings const &settings)
{
  validate(settings);
  require_finite(x0, "fixed-point initial iterate");
  Tracker tracker(settings, SolverMethod::Picard);
  ComplexTensor x = x0;
  for (;;) {
    ComplexTensor fx = T(x);
    if (tracker.record(x, fx)) {
      break;
    }
    x = std::move(fx);
  }
  return tracker.take();
}

/*
 * Anderson(m) in the constrained least-squares form: with G the last n <= m
 * residuals g_j = T(x_j) - x_j, solve
 *
 *   [ 0   1^T          ] [ b     ]   [ 1 ]
 *   [ 1   G G^T + lam I] [ alpha ] = [ 0 ]
 *
 * and set x = beta sum alpha_j T(x_j) + (1 - beta) sum alpha_j x_j.
 */
FixedPointResult anderson_solve(Operator const &T, ComplexTensor const &x0, SolverSettings const &settings)
{
  validate(settings);
  require_finite(x0, "fixed-point initial iterate");
  int const m = settings.memory;
  double const beta = settings.damping;
  Tracker tracker(settings, SolverMethod::Anderson);

  std::vector<ComplexTensor> xs(m);
  std::vector<ComplexTensor> fs(m);
  std::vector<ComplexTensor> gs(m);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);

  ComplexTensor x = x0;
  for (int k = 0;; k++) {
    ComplexTensor fx = T(x);
    if (tracker.record(x, fx)) {
      break;
    }
    int const slot = k % m;
    gs[slot] = fx - x;
    for (int j = 0; j < std::min(k + 1, m); j++) {
      double const g = real_inner(gs[slot], gs[j]);
      gram(slot, j) = g;
      gram(j, slot) = g;
    }
    xs[slot] = std::move(x);
    fs[slot] = std::move(fx);

    int const n = std::min(k + 1, m);
    std::vector<int> idx(n);
    for (int j = 0; j < n; j++) {
      idx[j] = (k - n + 1 + j) % m;
    }

    Eigen::VectorXd alpha;
    bool mixed = false;
    if (n > 1) {
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n + 1, n + 1);
      double diag = 0.0;
      for (int i = 0; i < n; i++) {
        for (int j = 0; j < n; j++) {
          H(i + 1, j + 1) = gram(idx[i], idx[j]);
        }
        diag += gram(idx[i], idx[i]);
      }
      double const lam = settings.ridge * diag / n;
      for (int i = 0; i < n; i++) {
        H(0, i + 1) = 1.0;
        H(i + 1, 0) = 1.0;
        H(i + 1, i + 1) += lam;
      }
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
      rhs(0) = 1.0;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(H);
      lu.setThreshold(1e-12);
      if (diag > 0.0 && lu.isInvertible()) {
        Eigen::VectorXd sol = lu.solve(rhs);
        alpha = sol.tail(n);
        mixed = alpha.allFinite();
      }
    }

    if (!mixed) {
      // Picard step from the newest pair
      ComplexTensor next = (1.0 - beta) * xs[slot];
      axpy(beta, fs[slot], next);
      x = std::move(next);
      continue;
    }
    ComplexTensor next(xs[slot].shape());
    for (int j = 0; j < n; j++) {
      axpy(beta * alpha(j), fs[idx[j]], next);
      if (beta < 1.0) {
        axpy((1.0 - beta) * alpha(j), xs[idx[j]], next);
      }
    }
    x = std::move(next);
  }
  return tracker.take();
}

FixedPointResult solve(Operator const &T, ComplexTensor const &x0, SolverSettings const &settings)
{
  return settings.method == SolverMethod::Anderson ? anderson_solve(T, x0, settings) : picard_solve(T, x0, settings);
}

bool geometric_rate_check(std::vector<double> const &residuals, double L, double slack, double floor)
{
  if (residuals.empty()) {
    return true;
  }
  double const r0 = residuals.front();
  double Lk = 1.0;
  for (double r : residuals) {
    if (r >= floor && r > slack * Lk * r0) {
      return false;
    }
    Lk *= L;
  }
  return true;
}

double residual_floor(ComplexTensor const &solution)
{
  return 100.0 * std::numeric_limits<double>::epsilon() * norm(solution);
}

std::string diagnostics_csv(FixedPointResult const &result, bool with_timing)
{
  std::string out = with_timing ? "iteration,residual,wall_time_ms\n" : "iteration,residual\n";
  for (std::size_t k = 0; k < result.residuals.size(); k++) {
    if (with_timing) {
      out += fmt::format("{},{:.17g},{:.3f}\n", k, result.residuals[k], result.wall_ms[k]);
    } else {
      out += fmt::format("{},{:.17g}\n", k, result.residuals[k]);
    }
  }
  return out;
}

} // namespace deqpocs
