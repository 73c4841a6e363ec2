#include "deqpocs/deq_train.hpp"

#include "deqpocs/errors.hpp"
#include "deqpocs/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

namespace deqpocs {

void adam_update(std::span<double> values, AdamState &state, std::span<double const> grads, TrainConfig const &config)
{
  if (grads.size() != values.size()) {
    throw ShapeError("adam: gradient length does not match parameter count");
  }
  if (state.m.empty()) {
    state.m.assign(values.size(), 0.0);
    state.v.assign(values.size(), 0.0);
  } else if (state.m.size() != values.size()) {
    throw ShapeError("adam: optimizer state does not match parameter count");
  }
  for (std::size_t i = 0; i < grads.size(); i++) {
    if (!std::isfinite(grads[i])) {
      throw TrainingError(fmt::format("non-finite gradient at optimizer step {}", state.step + 1));
    }
  }
  state.step++;
  double const b1 = config.beta1;
  double const b2 = config.beta2;
  double const c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  double const c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < values.size(); i++) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grads[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grads[i] * grads[i];
    double const mhat = state.m[i] / c1;
    double const vhat = state.v[i] / c2;
    values[i] -= config.lr * mhat / (std::sqrt(vhat) + config.adam_eps);
  }
}

void adam_step(ConsistencyNetParams &params, AdamState &state, std::span<double const> grads, TrainConfig const &config)
{
  std::vector<double> values = flatten(params);
  std::vector<double> const before = values;
  adam_update(values, state, grads, config);
  if (values == before) {
    // nothing moved: the certified state is still valid
    return;
  }
  unflatten(params, values);
  normalize_in_place(params, config.normalize_iters);
}

// The returned operator keeps a reference to params.
Operator pocs_operator(ConsistencyNetParams const &params, SamplingMask const &mask, ComplexTensor const &y)
{
  if (y.grid() != mask.grid()) {
    throw ShapeError("measurement and mask grids differ");
  }
  return [&params, mask, y](ComplexTensor const &x) { return project_data_consistency(forward(params, x), mask, y); };
}

ImplicitGradient implicit_backward(
  ConsistencyNetParams const &params,
  ComplexTensor const &x_fp,
  SamplingMask const &mask,
  ComplexTensor const &grad_loss,
  double tol,
  int max_iter)
{
  require_same_shape(x_fp, grad_loss, "implicit_backward gradient");
  ImplicitGradient out;
  Tape const tape = forward_tape(params, x_fp);

  ComplexTensor v = grad_loss;
  double best_r = std::numeric_limits<double>::infinity();
  ComplexTensor best = v;
  if (norm(grad_loss) == 0.0) {
    out.converged = true;
  } else {
    for (int k = 0; k < max_iter; k++) {
      ComplexTensor w = v;
      zero_sampled(w, mask);
      ComplexTensor next = grad_loss + backward(params, tape, w, false).x;
      if (!all_finite(next)) {
        throw DivergenceError(fmt::format("adjoint iteration became non-finite at iteration {}", k), k);
      }
      double const r = distance(next, v);
      v = std::move(next);
      out.iterations = k + 1;
      if (r < best_r) {
        best_r = r;
        best = v;
      }
      if (r <= tol * norm(v)) {
        out.converged = true;
        break;
      }
    }
    if (!out.converged) {
      std::cerr << fmt::format(
        "warning: adjoint iteration stopped after {} iterations without reaching tol {:g}\n", out.iterations, tol);
      v = std::move(best);
    }
  }
  zero_sampled(v, mask);
  out.params = backward(params, tape, v, true).params;
  return out;
}

double kspace_loss(ComplexTensor const &x, ComplexTensor const &target)
{
  require_same_shape(x, target, "loss");
  return squared_norm(x - target);
}

FixedPointResult reconstruct(
  ConsistencyNetParams const &params,
  Measurement const &meas,
  SolverSettings const &settings,
  std::optional<ComplexTensor> const &x0)
{
  Operator const T = pocs_operator(params, meas.mask, meas.y);
  return solve(T, x0 ? *x0 : meas.y, settings);
}

std::pair<ConsistencyNetParams, TrainReport>
train(std::span<TrainingSample const> dataset, TrainConfig const &config, ConsistencyNetParams params)
{
  if (dataset.empty()) {
    throw ConfigError("training set is empty");
  }
  if (config.epochs < 1) {
    throw ConfigError("epochs must be >= 1");
  }
  if (!(config.lr > 0.0)) {
    throw ConfigError("learning rate must be > 0");
  }
  Shape3 const shape = dataset.front().full.shape();
  for (auto const &s : dataset) {
    if (s.full.shape() != shape || s.meas.y.shape() != shape) {
      throw ShapeError("training samples must share one (H, W, Nc) shape");
    }
  }
  if (shape.channels != params.coils) {
    throw ShapeError("training data coil count does not match the network");
  }

  TrainReport report;
  AdamState adam;
  Rng rng(config.shuffle_seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; epoch++) {
    for (std::size_t i = order.size(); i > 1; i--) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    EpochStats stats;
    stats.epoch = epoch;
    for (std::size_t s : order) {
      TrainingSample const &sample = dataset[s];
      FixedPointResult fp;
      try {
        fp = reconstruct(params, sample.meas, config.forward);
      } catch (DivergenceError const &e) {
        throw TrainingError(fmt::format("forward solve diverged at epoch {}, sample {}: {}", epoch, s, e.what()));
      }
      ComplexTensor const diff = fp.solution - sample.full;
      stats.mean_loss += squared_norm(diff);
      stats.mean_fwd_iters += fp.iterations;

      ImplicitGradient grad;
      try {
        grad = implicit_backward(
          params, fp.solution, sample.meas.mask, 2.0 * diff, config.backward_tol, config.backward_max_iter);
      } catch (DivergenceError const &e) {
        throw TrainingError(fmt::format("backward solve diverged at epoch {}, sample {}: {}", epoch, s, e.what()));
      }
      stats.mean_bwd_iters += grad.iterations;
      adam_step(params, adam, grad.params, config);

      double const L = certified_lipschitz(params).L;
      report.step_L.push_back(L);
      stats.max_L = std::max(stats.max_L, L);
    }
    double const n = static_cast<double>(dataset.size());
    stats.mean_loss /= n;
    stats.mean_fwd_iters /= n;
    stats.mean_bwd_iters /= n;
    report.epochs.push_back(stats);
    if (config.on_epoch) {
      config.on_epoch(stats);
    }
  }

  double eps = 0.0;
  for (auto const &sample : dataset) {
    eps += distance(reconstruct(params, sample.meas, config.forward).solution, sample.full);
  }
  report.eps_hat = eps / static_cast<double>(dataset.size());
  return {std::move(params), std::move(report)};
}

std::string train_report_csv(TrainReport const &report)
{
  std::string out = "epoch,mean_loss,mean_fwd_iters,mean_bwd_iters,L\n";
  for (auto const &e : report.epochs) {
    out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", e.epoch, e.mean_loss, e.mean_fwd_iters, e.mean_bwd_iters, e.max_L);
  }
  return out;
}

} // namespace deqpocs
