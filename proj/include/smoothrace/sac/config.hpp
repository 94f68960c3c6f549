#pragma once

#include <cstdint>

namespace smoothrace::sac {

struct SACConfig {
  double gamma = 0.98;
  double alpha_init = 0.3;
  double lr = 3e-4;
  int batch_size = 64;
  int global_buffer = 10000;
  int local_buffer = 2000;
  int workers = 1;
  double tau = 0.005;
  double target_entropy = -2.0;
  /// Gradient updates per environment step; fractional values update every
  /// 1/updates_per_step steps.
  double updates_per_step = 1.0;
  /// Environment steps taken with uniform random actions before the policy acts.
  std::int64_t warmup_steps = 1000;

  void validate() const;
  friend bool operator==(const SACConfig&, const SACConfig&) = default;
};

}  // namespace smoothrace::sac
