#pragma once

#include "tensor.hpp"

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace deqpocs {

using Operator = std::function<ComplexTensor(ComplexTensor const &)>;

enum class SolverMethod
{
  Picard,
  Anderson,
};

std::string_view to_string(SolverMethod m);

struct SolverSettings
{
  SolverMethod method = SolverMethod::Picard;
  double tol = 1e-5;  // relative to max(1, ||x||)
  int max_iter = 200;
  int fixed_iterations = 0; // > 0: run exactly this many steps, ignore tol for stopping
  // Anderson
  int memory = 5;
  double damping = 1.0;
  double ridge = 1e-4; // relative to the mean diagonal of the Gram matrix
  // Stop after this many consecutive residual increases and return the
  // best-residual iterate (0 disables). For operators with no contraction
  // guarantee.
  int divergence_window = 0;

  static SolverSettings picard(double tol = 1e-5, int max_iter = 200);
  static SolverSettings anderson(double tol = 1e-5, int max_iter = 60);
};

struct FixedPointResult
{
  ComplexTensor solution;
  std::vector<double> residuals; // ||T(x_k) - x_k||_F, one per operator application
  std::vector<double> wall_ms;   // cumulative wall time after each iteration
  int iterations = 0;
  bool converged = false;
  double tol = 0.0;
  SolverMethod method = SolverMethod::Picard;
};

FixedPointResult picard_solve(Operator const &T, ComplexTensor const &x0, SolverSettings const &settings);
FixedPointResult anderson_solve(Operator const &T, ComplexTensor const &x0, SolverSettings const &settings);
FixedPointResult solve(Operator const &T, ComplexTensor const &x0, SolverSettings const &settings);

// residual_k <= slack * L^k * residual_0 for every k, skipping residuals
// below `floor` (numerical noise once the iteration has converged).
bool geometric_rate_check(std::vector<double> const &residuals, double L, double slack, double floor = 0.0);

// 100 * machine epsilon * ||x||, the floor used with geometric_rate_check.
double residual_floor(ComplexTensor const &solution);

// CSV: iteration,residual,wall_time_ms
std::string diagnostics_csv(FixedPointResult const &result, bool with_timing = true);

} // namespace deqpocs
