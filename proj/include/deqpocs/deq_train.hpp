#pragma once

#include "consistency_net.hpp"
#include "fixed_point.hpp"
#include "forward_model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace deqpocs {

struct TrainingSample
{
  ComplexTensor full; // ground-truth k-space
  Measurement meas;
};

struct EpochStats
{
  int epoch = 0;
  double mean_loss = 0.0;
  double mean_fwd_iters = 0.0;
  double mean_bwd_iters = 0.0;
  double max_L = 0.0;
};

struct TrainConfig
{
  int epochs = 50;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  SolverSettings forward = SolverSettings::anderson(1e-4, 60);
  double backward_tol = 1e-4;
  int backward_max_iter = 200;
  std::uint64_t shuffle_seed = 0;
  int normalize_iters = 5;
  std::function<void(EpochStats const &)> on_epoch;
};

struct TrainReport
{
  std::vector<EpochStats> epochs;
  std::vector<double> step_L; // certificate after every optimizer step
  double eps_hat = 0.0;       // mean ||x_fp - x_full|| over the training set, final params
};

struct AdamState
{
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

// Bias-corrected Adam on a flat real vector.
void adam_update(std::span<double> values, AdamState &state, std::span<double const> grads, TrainConfig const &config);

// Adam on the real parameterisation followed by normalize_in_place.
void adam_step(ConsistencyNetParams &params, AdamState &state, std::span<double const> grads, TrainConfig const &config);

// T(x) = P_C(Phi(x)) for measurement y on mask.
Operator pocs_operator(ConsistencyNetParams const &params, SamplingMask const &mask, ComplexTensor const &y);

struct ImplicitGradient
{
  std::vector<double> params;
  int iterations = 0;
  bool converged = false;
};

/*
 * Parameter gradient of a loss at the fixed point x_fp of P_C o Phi:
 *   v = (I - J^T)^{-1} g   via   v <- g + J^T v,   J^T v = Phi'(x_fp)^T (I - M) v
 *   grad = (dPhi/dphi)^T (I - M) v
 */
ImplicitGradient implicit_backward(
  ConsistencyNetParams const &params,
  ComplexTensor const &x_fp,
  SamplingMask const &mask,
  ComplexTensor const &grad_loss,
  double tol,
  int max_iter);

// Squared Frobenius loss and its gradient 2 (x - target).
double kspace_loss(ComplexTensor const &x, ComplexTensor const &target);

std::pair<ConsistencyNetParams, TrainReport>
train(std::span<TrainingSample const> dataset, TrainConfig const &config, ConsistencyNetParams params);

// Fixed point of P_C o Phi starting from x0 (default: the measurement).
FixedPointResult reconstruct(
  ConsistencyNetParams const &params,
  Measurement const &meas,
  SolverSettings const &settings,
  std::optional<ComplexTensor> const &x0 = std::nullopt);

// epoch,mean_loss,mean_fwd_iters,mean_bwd_iters,L
std::string train_report_csv(TrainReport const &report);

} // namespace deqpocs
