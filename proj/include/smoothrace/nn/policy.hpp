#pragma once

#include <span>

#include "smoothrace/nn/tensor.hpp"

namespace smoothrace::nn {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

/// Raw head output to log-std: a tanh squash onto [kLogStdMin, kLogStdMax],
/// smooth so that gradients exist everywhere.
Real squash_log_std(Real raw);
/// d squash_log_std / d raw.
Real squash_log_std_grad(Real raw);

/// Gaussian-policy network output [N, 2A] split into means and log-stds,
/// each [N, A].
struct PolicyHeads {
  Tensor mean;
  Tensor log_std;
};
PolicyHeads split_policy_output(const Tensor& raw, int action_dim);

/// Reverse of split_policy_output: packs dL/dmean and dL/dlog_std into the
/// raw-output gradient, including the log-std squash derivative.
Tensor merge_policy_grad(const Tensor& raw, const Tensor& grad_mean, const Tensor& grad_log_std);

/// action = tanh(mean + exp(log_std) * noise), returned strictly inside
/// (-1,1). Returns log pi(action) including the tanh change of variables.
Real sample_squashed_gaussian(std::span<const Real> mean, std::span<const Real> log_std,
                              std::span<const Real> noise, std::span<Real> action);

/// Deterministic action tanh(mean).
void deterministic_action(std::span<const Real> mean, std::span<Real> action);

/// Backpropagates dL/daction and dL/dlog_prob of one sample (noise held
/// fixed) to dL/dmean and dL/dlog_std.
void squashed_gaussian_backward(std::span<const Real> mean, std::span<const Real> log_std,
                                std::span<const Real> noise, std::span<const Real> action,
                                std::span<const Real> grad_action, Real grad_log_prob,
                                std::span<Real> grad_mean, std::span<Real> grad_log_std);

}  // namespace smoothrace::nn
