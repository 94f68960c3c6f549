#pragma once

#include <vector>

#include "smoothrace/nn/adam.hpp"
#include "smoothrace/nn/checkpoint.hpp"
#include "smoothrace/nn/network.hpp"
#include "smoothrace/reg/regularizers.hpp"
#include "smoothrace/rng.hpp"
#include "smoothrace/sac/config.hpp"
#include "smoothrace/sac/replay.hpp"

namespace smoothrace::sac {

/// Actor, twin critics with their targets, and the entropy temperature.
struct Agent {
  nn::Network actor_net;
  nn::Network critic_net;
  nn::ParamSet actor;
  nn::ParamSet q1;
  nn::ParamSet q2;
  nn::ParamSet q1_target;
  nn::ParamSet q2_target;
  nn::ParamSet log_alpha;  // one scalar, optimized with Adam

  Agent(const nn::NetworkSpec& actor_spec, const nn::NetworkSpec& critic_spec, double alpha_init, Rng& rng);

  double alpha() const;
  nn::Checkpoint to_checkpoint(std::int64_t step, const std::string& config_hash) const;
  static Agent from_checkpoint(const nn::Checkpoint& ckpt);
};

/// y = r + gamma (1 - done) (min(Q1', Q2')(s', a') - alpha log pi(a'|s')),
/// with a' drawn using the given noise [N, A].
std::vector<double> critic_target(const Batch& batch, const Agent& agent, double alpha, double gamma,
                                  const nn::Tensor& noise);

struct CriticLoss {
  double loss = 0.0;  // mean((Q1 - y)^2) + mean((Q2 - y)^2)
  nn::GradSet grad_q1;
  nn::GradSet grad_q2;
};

CriticLoss critic_loss(const Batch& batch, const Agent& agent, const std::vector<double>& targets);
/// critic_loss followed by an Adam step on both critics.
double critic_update(const Batch& batch, Agent& agent, const std::vector<double>& targets,
                     const nn::AdamConfig& adam);

/// Everything the actor loss needs besides the agent and batch.
struct ActorInputs {
  double alpha = 0.3;
  const nn::Tensor* noise = nullptr;            // [N, A]
  const nn::Tensor* similar_obs = nullptr;      // [N, 1, H, W]; required when spatial
  const reg::RegConfig* reg = nullptr;
};

struct ActorLoss {
  double loss = 0.0;      // sac_loss + penalty
  double sac_loss = 0.0;  // mean(alpha log pi - min Q)
  double mean_log_prob = 0.0;
  reg::SmoothLossReport penalty;
  nn::GradSet grad;
};

/// Minimized actor loss mean(alpha log pi(a|s) - min(Q1,Q2)(s,a)) + penalty,
/// with its gradient w.r.t. the actor parameters.
ActorLoss actor_objective(const Batch& batch, const Agent& agent, const ActorInputs& in);

/// One Adam step on log alpha toward E[-log pi] = target_entropy. Returns the new alpha.
double alpha_update(Agent& agent, double mean_log_prob, double target_entropy, const nn::AdamConfig& adam);

}  // namespace smoothrace::sac
