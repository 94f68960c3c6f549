#include "smoothrace/sac/agent.hpp"

#include <algorithm>
#include <cmath>

#include "smoothrace/error.hpp"
#include "smoothrace/nn/policy.hpp"

namespace smoothrace::sac {

using nn::Tensor;

namespace {

nn::ParamSet scalar_param(const std::string& name, double value) {
  nn::ParamSet ps;
  nn::Parameter p;
  p.name = name;
  p.value = Tensor({1}, static_cast<Real>(value));
  p.m = Tensor({1});
  p.v = Tensor({1});
  ps.entries.push_back(std::move(p));
  return ps;
}

Tensor column(const std::vector<Real>& v) {
  Tensor t({v.size(), 1});
  std::copy(v.begin(), v.end(), t.values.begin());
  return t;
}

void require_batch(const Batch& b) {
  if (b.size() == 0) throw ParameterError("empty batch");
}


Tensor concat_rows(const std::vector<const Tensor*>& parts) {
  std::vector<std::size_t> shape = parts.front()->shape;
  shape[0] = 0;
  for (const Tensor* p : parts) shape[0] += p->dim(0);
  Tensor out(shape);
  auto it = out.values.begin();
  for (const Tensor* p : parts) it = std::copy(p->values.begin(), p->values.end(), it);
  return out;
}

}  // namespace

Agent::Agent(const nn::NetworkSpec& actor_spec, const nn::NetworkSpec& critic_spec, double alpha_init, Rng& rng)
    : actor_net(actor_spec), critic_net(critic_spec) {
  if (actor_spec.head != nn::Head::gaussian_policy) throw ParameterError("actor must have a gaussian-policy head");
  if (critic_spec.head != nn::Head::q_value || critic_spec.side_dim != actor_spec.action_dim)
    throw ParameterError("critic must be a q_value head taking the action as side input");
  if (!(alpha_init > 0.0)) throw ParameterError("alpha_init must be positive");
  actor = actor_net.init(rng);
  q1 = critic_net.init(rng);
  q2 = critic_net.init(rng);
  q1_target = q1;
  q2_target = q2;
  log_alpha = scalar_param("log_alpha", std::log(alpha_init));
}

double Agent::alpha() const { return std::exp(double(log_alpha.entries[0].value[0])); }

nn::Checkpoint Agent::to_checkpoint(std::int64_t step, const std::string& config_hash) const {
  nn::Checkpoint ck;
  ck.step = step;
  ck.config_hash = config_hash;
  ck.networks.push_back({"actor", actor_net.spec(), actor});
  ck.networks.push_back({"critic1", critic_net.spec(), q1});
  ck.networks.push_back({"critic2", critic_net.spec(), q2});
  ck.networks.push_back({"critic1_target", critic_net.spec(), q1_target});
  ck.networks.push_back({"critic2_target", critic_net.spec(), q2_target});
  ck.scalars.emplace_back("log_alpha", double(log_alpha.entries[0].value[0]));
  return ck;
}

Agent Agent::from_checkpoint(const nn::Checkpoint& ck) {
  Rng unused(0);
  const auto& a = ck.network("actor");
  const auto& c1 = ck.network("critic1");
  Agent agent(a.spec, c1.spec, std::exp(ck.scalar("log_alpha")), unused);
  agent.actor = a.params;
  agent.q1 = c1.params;
  agent.q2 = ck.network("critic2").params;
  agent.q1_target = ck.network("critic1_target").params;
  agent.q2_target = ck.network("critic2_target").params;
  agent.log_alpha.entries[0].value[0] = static_cast<Real>(ck.scalar("log_alpha"));
  return agent;
}

std::vector<double> critic_target(const Batch& batch, const Agent& agent, double alpha, double gamma,
                                  const Tensor& noise) {
  require_batch(batch);
  const std::size_t n = batch.size();
  const int ad = agent.actor_net.spec().action_dim;
  if (noise.shape != std::vector<std::size_t>{n, std::size_t(ad)}) throw ShapeError("target noise must be N x A");
  const auto heads = nn::split_policy_output(agent.actor_net.forward(agent.actor, batch.next_obs), ad);
  Tensor next_action({n, std::size_t(ad)});
  std::vector<double> log_prob(n);
  for (std::size_t i = 0; i < n; ++i)
    log_prob[i] = nn::sample_squashed_gaussian(heads.mean.row(i), heads.log_std.row(i), noise.row(i),
                                               next_action.row(i));
  const Tensor t1 = agent.critic_net.forward(agent.q1_target, batch.next_obs, &next_action);
  const Tensor t2 = agent.critic_net.forward(agent.q2_target, batch.next_obs, &next_action);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double q = std::min(double(t1[i]), double(t2[i]));
    y[i] = batch.reward[i] + gamma * (1.0 - batch.done[i]) * (q - alpha * log_prob[i]);
  }
  return y;
}

CriticLoss critic_loss(const Batch& batch, const Agent& agent, const std::vector<double>& targets) {
  require_batch(batch);
  const std::size_t n = batch.size();
  if (targets.size() != n) throw ShapeError("targets must match the batch");
  CriticLoss out;
  auto one = [&](const nn::ParamSet& q, nn::GradSet& grad) {
    nn::ForwardCache cache;
    const Tensor pred = agent.critic_net.forward(q, batch.obs, &batch.action, &cache);
    std::vector<Real> g(n);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double err = double(pred[i]) - targets[i];
      loss += err * err;
      g[i] = static_cast<Real>(2.0 * err / double(n));
    }
    grad = agent.critic_net.backward(q, cache, column(g));
    return loss / double(n);
  };
  out.loss = one(agent.q1, out.grad_q1) + one(agent.q2, out.grad_q2);
  return out;
}

double critic_update(const Batch& batch, Agent& agent, const std::vector<double>& targets,
                     const nn::AdamConfig& adam) {
  CriticLoss l = critic_loss(batch, agent, targets);
  if (!std::isfinite(l.loss)) throw NumericError("critic loss is not finite");
  nn::adam_step(agent.q1, l.grad_q1, adam);
  nn::adam_step(agent.q2, l.grad_q2, adam);
  return l.loss;
}

ActorLoss actor_objective(const Batch& batch, const Agent& agent, const ActorInputs& in) {
  require_batch(batch);
  if (in.reg == nullptr) throw ParameterError("actor objective needs a regularizer configuration");
  const reg::RegConfig& rc = *in.reg;
  const std::size_t n = batch.size();
  const int ad = agent.actor_net.spec().action_dim;
  if (in.noise == nullptr || in.noise->shape != std::vector<std::size_t>{n, std::size_t(ad)})
    throw ShapeError("actor noise must be N x A");
  const bool temporal = rc.uses_temporal();
  const bool spatial = rc.uses_spatial();
  if (spatial && (in.similar_obs == nullptr || in.similar_obs->shape != batch.obs.shape))
    throw ShapeError("spatial smoothness needs similar observations shaped like the batch");

  // One actor pass over [s_t ; s_t+1 ; s'_t] as needed.
  std::vector<const Tensor*> parts{&batch.obs};
  if (temporal) parts.push_back(&batch.next_obs);
  if (spatial) parts.push_back(in.similar_obs);
  const Tensor stacked = parts.size() == 1 ? batch.obs : concat_rows(parts);
  nn::ForwardCache actor_cache;
  const Tensor raw = agent.actor_net.forward(agent.actor, stacked, nullptr, &actor_cache);
  const auto heads = nn::split_policy_output(raw, ad);
  const std::size_t rows = stacked.dim(0);

  // Reparameterized actions for the current states.
  Tensor action({n, std::size_t(ad)});
  std::vector<double> log_prob(n);
  for (std::size_t i = 0; i < n; ++i)
    log_prob[i] = nn::sample_squashed_gaussian(heads.mean.row(i), heads.log_std.row(i), in.noise->row(i),
                                               action.row(i));

  nn::ForwardCache c1, c2;
  const Tensor q1 = agent.critic_net.forward(agent.q1, batch.obs, &action, &c1);
  const Tensor q2 = agent.critic_net.forward(agent.q2, batch.obs, &action, &c2);
  std::vector<Real> up1(n, Real(0)), up2(n, Real(0));
  ActorLoss out;
  double sac = 0.0, mean_lp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool first = q1[i] <= q2[i];
    const double qmin = first ? q1[i] : q2[i];
    sac += in.alpha * log_prob[i] - qmin;
    mean_lp += log_prob[i];
    (first ? up1 : up2)[i] = static_cast<Real>(-1.0 / double(n));
  }
  out.sac_loss = sac / double(n);
  out.mean_log_prob = mean_lp / double(n);
  Tensor dq_da1, dq_da2;
  agent.critic_net.backward(agent.q1, c1, column(up1), &dq_da1, nn::BackwardScope::side_only);
  agent.critic_net.backward(agent.q2, c2, column(up2), &dq_da2, nn::BackwardScope::side_only);

  Tensor grad_mean({rows, std::size_t(ad)});
  Tensor grad_log_std({rows, std::size_t(ad)});
  const Real dlogp = static_cast<Real>(in.alpha / double(n));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Real> ga(ad);
    for (int j = 0; j < ad; ++j) ga[j] = dq_da1[i * ad + j] + dq_da2[i * ad + j];
    nn::squashed_gaussian_backward(heads.mean.row(i), heads.log_std.row(i), in.noise->row(i), action.row(i), ga,
                                   dlogp, grad_mean.row(i), grad_log_std.row(i));
  }

  // Smoothness penalty on deterministic actions tanh(mean).
  std::vector<double> lambda_ir;
  if (rc.ir_control) {
    lambda_ir.resize(n);
    const auto& speed = rc.ir_speed == reg::IrSpeedSource::commanded ? batch.speed_norm01
                                                                      : batch.measured_speed_norm01;
    for (std::size_t i = 0; i < n; ++i) lambda_ir[i] = reg::ir_weight(speed[i], batch.reward_norm01[i]);
  }
  std::vector<double> not_done(n);
  for (std::size_t i = 0; i < n; ++i) not_done[i] = 1.0 - batch.done[i];
  auto det_rows = [&](std::size_t begin) {
    Tensor t({n, std::size_t(ad)});
    for (std::size_t i = 0; i < n; ++i) nn::deterministic_action(heads.mean.row(begin + i), t.row(i));
    return t;
  };
  const Tensor det_t = det_rows(0);
  std::size_t next_begin = n, sim_begin = temporal ? 2 * n : n;
  Tensor det_next, det_sim;
  if (temporal) det_next = det_rows(next_begin);
  if (spatial) det_sim = det_rows(sim_begin);
  reg::PenaltyInputs pin{&det_t, temporal ? &det_next : nullptr, spatial ? &det_sim : nullptr, not_done, lambda_ir};
  reg::PenaltyGrads pg;
  out.penalty = reg::penalty_with_grads(pin, rc, &pg);
  auto add_det_grad = [&](const Tensor& g, std::size_t begin) {
    for (std::size_t i = 0; i < n; ++i)
      for (int j = 0; j < ad; ++j) {
        const double t = std::tanh(double(heads.mean[(begin + i) * ad + j]));
        grad_mean[(begin + i) * ad + j] += static_cast<Real>(double(g[i * ad + j]) * (1.0 - t * t));
      }
  };
  add_det_grad(pg.action_t, 0);
  if (temporal) add_det_grad(pg.action_next, next_begin);
  if (spatial) add_det_grad(pg.action_similar, sim_begin);

  out.loss = out.sac_loss + out.penalty.penalty_total;
  if (!std::isfinite(out.loss)) throw NumericError("actor loss is not finite");
  out.grad = agent.actor_net.backward(agent.actor, actor_cache, nn::merge_policy_grad(raw, grad_mean, grad_log_std));
  return out;
}

double alpha_update(Agent& agent, double mean_log_prob, double target_entropy, const nn::AdamConfig& adam) {
  // loss = -log_alpha * (log_pi + target_entropy), averaged over the batch.
  nn::GradSet g{Tensor({1}, static_cast<Real>(-(mean_log_prob + target_entropy)))};
  nn::adam_step(agent.log_alpha, g, adam);
  return agent.alpha();
}

}  // namespace smoothrace::sac
