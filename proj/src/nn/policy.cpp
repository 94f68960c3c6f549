#include "smoothrace/nn/policy.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "smoothrace/error.hpp"

namespace smoothrace::nn {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

// log(1 - tanh(u)^2) without cancellation for large |u|.
double log_one_minus_tanh2(double u) {
  const double au = std::abs(u);
  return 2.0 * (std::numbers::ln2 - au - std::log1p(std::exp(-2.0 * au)));
}

Real inside_unit(double a) {
  const Real lim = std::nextafter(Real(1), Real(0));
  Real r = static_cast<Real>(a);
  if (r > lim) r = lim;
  if (r < -lim) r = -lim;
  return r;
}

}  // namespace

Real squash_log_std(Real raw) {
  return static_cast<Real>(kLogStdMin + 0.5 * (kLogStdMax - kLogStdMin) * (std::tanh(double(raw)) + 1.0));
}

Real squash_log_std_grad(Real raw) {
  const double t = std::tanh(double(raw));
  return static_cast<Real>(0.5 * (kLogStdMax - kLogStdMin) * (1.0 - t * t));
}

PolicyHeads split_policy_output(const Tensor& raw, int action_dim) {
  if (raw.rank() != 2 || raw.dim(1) != std::size_t(2 * action_dim))
    throw ShapeError("policy output must be N x " + std::to_string(2 * action_dim));
  const std::size_t n = raw.dim(0);
  PolicyHeads h{Tensor({n, std::size_t(action_dim)}), Tensor({n, std::size_t(action_dim)})};
  for (std::size_t i = 0; i < n; ++i)
    for (int j = 0; j < action_dim; ++j) {
      h.mean[i * action_dim + j] = raw[i * 2 * action_dim + j];
      h.log_std[i * action_dim + j] = squash_log_std(raw[i * 2 * action_dim + action_dim + j]);
    }
  return h;
}

Tensor merge_policy_grad(const Tensor& raw, const Tensor& grad_mean, const Tensor& grad_log_std) {
  require_same_shape(grad_mean, grad_log_std, "merge_policy_grad");
  const std::size_t n = grad_mean.dim(0);
  const std::size_t a = grad_mean.dim(1);
  if (raw.shape != std::vector<std::size_t>{n, 2 * a}) throw ShapeError("merge_policy_grad: raw shape");
  Tensor g(raw.shape);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < a; ++j) {
      g[i * 2 * a + j] = grad_mean[i * a + j];
      g[i * 2 * a + a + j] = grad_log_std[i * a + j] * squash_log_std_grad(raw[i * 2 * a + a + j]);
    }
  return g;
}

Real sample_squashed_gaussian(std::span<const Real> mean, std::span<const Real> log_std,
                              std::span<const Real> noise, std::span<Real> action) {
  double log_prob = 0.0;
  for (std::size_t j = 0; j < mean.size(); ++j) {
    const double u = double(mean[j]) + std::exp(double(log_std[j])) * double(noise[j]);
    action[j] = inside_unit(std::tanh(u));
    log_prob += -0.5 * double(noise[j]) * double(noise[j]) - double(log_std[j]) - kHalfLog2Pi -
                log_one_minus_tanh2(u);
  }
  return static_cast<Real>(log_prob);
}

void deterministic_action(std::span<const Real> mean, std::span<Real> action) {
  for (std::size_t j = 0; j < mean.size(); ++j) action[j] = inside_unit(std::tanh(double(mean[j])));
}

void squashed_gaussian_backward(std::span<const Real> mean, std::span<const Real> log_std,
                                std::span<const Real> noise, std::span<const Real> action,
                                std::span<const Real> grad_action, Real grad_log_prob,
                                std::span<Real> grad_mean, std::span<Real> grad_log_std) {
  for (std::size_t j = 0; j < mean.size(); ++j) {
    const double sigma_eps = std::exp(double(log_std[j])) * double(noise[j]);
    // Use the unclamped tanh so the derivative is exact.
    const double a = std::tanh(double(mean[j]) + sigma_eps);
    (void)action;
    const double da_du = 1.0 - a * a;
    const double dlogp_du = 2.0 * a;
    const double du = double(grad_action[j]) * da_du + double(grad_log_prob) * dlogp_du;
    grad_mean[j] = static_cast<Real>(du);
    grad_log_std[j] = static_cast<Real>(du * sigma_eps - double(grad_log_prob));
  }
}

}  // namespace smoothrace::nn
