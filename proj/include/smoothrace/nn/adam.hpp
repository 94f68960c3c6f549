#pragma once

#include "smoothrace/nn/network.hpp"

namespace smoothrace::nn {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam step; increments params.step.
void adam_step(ParamSet& params, const GradSet& grads, const AdamConfig& cfg);

/// target <- (1 - tau) * target + tau * source, values only.
void soft_update(ParamSet& target, const ParamSet& source, double tau);

}  // namespace smoothrace::nn
