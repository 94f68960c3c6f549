#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <vector>

#include "smoothrace/error.hpp"
#include "smoothrace/nn/adam.hpp"
#include "smoothrace/nn/policy.hpp"
#include "smoothrace/reg/regularizers.hpp"
#include "smoothrace/rng.hpp"
#include "smoothrace/sac/agent.hpp"
#include "smoothrace/sac/replay.hpp"
#include "smoothrace/sac/trainer.hpp"

using namespace smoothrace;
using namespace smoothrace::sac;
using nn::Tensor;

namespace {

Transition numbered(int id) {
  Observation o(2, 1, 0.0f);
  o.pixels[0] = static_cast<float>(id);
  Transition t;
  t.obs = o;
  t.next_obs = o;
  t.reward = 0.5;
  return t;
}

// Networks reading 1x2 images straight into the output layer.
nn::NetworkSpec tiny_spec(nn::Head head) {
  nn::NetworkSpec s;
  s.in_height = 1;
  s.in_width = 2;
  s.conv = {};
  s.dense = {};
  s.activation = nn::Activation::tanh;
  s.head = head;
  if (head == nn::Head::q_value) s.side_dim = 2;
  return s;
}

void set_values(nn::ParamSet& ps, const std::string& name, const std::vector<double>& v) {
  auto& t = ps.find(name).value;
  ASSERT_EQ(t.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = static_cast<Real>(v[i]);
}

Tensor matrix(std::size_t rows, std::size_t cols, const std::vector<double>& v) {
  Tensor t({rows, cols});
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = static_cast<Real>(v[i]);
  return t;
}

nn::NetworkSpec small_policy() {
  nn::NetworkSpec s = nn::policy_spec(12, 16);
  s.conv = {{4, 3, 2}, {4, 3, 2}};
  s.dense = {16};
  return s;
}

nn::NetworkSpec small_critic() {
  nn::NetworkSpec s = nn::critic_spec(12, 16);
  s.conv = {{4, 3, 2}, {4, 3, 2}};
  s.dense = {16};
  return s;
}

Batch random_batch(std::size_t n, Rng& rng) {
  std::vector<Transition> items;
  for (std::size_t i = 0; i < n; ++i) {
    Observation o(16, 12), p(16, 12);
    for (float& v : o.pixels) v = static_cast<float>(rng.uniform());
    for (float& v : p.pixels) v = static_cast<float>(rng.uniform());
    items.push_back(make_transition(o, sim::ActionCmd(rng.uniform(-1, 1), rng.uniform(-1, 1)), rng.uniform(), p,
                                    i % 4 == 3, rng.uniform(1.0, 4.0)));
  }
  std::vector<const Transition*> ptrs;
  for (const auto& t : items) ptrs.push_back(&t);
  return make_batch(ptrs);
}

Tensor noise(std::size_t n, Rng& rng) {
  Tensor t({n, 2});
  for (auto& v : t.values) v = static_cast<Real>(rng.normal());
  return t;
}

TrainSetup small_setup(std::uint64_t seed, std::int64_t steps) {
  TrainSetup s;
  sim::RenderParams render;
  render.width = 16;
  render.height = 12;
  s.make_env = [render](int) {
    return sim::Env(sim::make_track(sim::TrackPreset::oval, 0.6), render, sim::kDefaultDt, 120);
  };
  s.make_eval_env = s.make_env;
  s.actor_spec = small_policy();
  s.critic_spec = small_critic();
  s.sac.batch_size = 16;
  s.sac.warmup_steps = 40;
  s.sac.global_buffer = 500;
  s.sac.local_buffer = 50;
  s.seed = seed;
  s.total_steps = steps;
  s.log_every = 25;
  return s;
}

}  // namespace

TEST(ReplayBuffer, CapacityAndOldestFirstUnderFuzz) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t cap = 1 + rng.index(300);
    ReplayBuffer buf(cap);
    const int inserts = 5000;
    for (int i = 0; i < inserts; ++i) {
      buf.push(numbered(i));
      ASSERT_LE(buf.size(), cap);
      ASSERT_EQ(buf.size(), std::min<std::size_t>(cap, std::size_t(i) + 1));
      // Oldest retained entry and newest entry.
      const int oldest = i + 1 - int(buf.size());
      ASSERT_EQ(int(buf.at(0).obs.pixels[0]), oldest);
      ASSERT_EQ(int(buf.at(buf.size() - 1).obs.pixels[0]), i);
    }
    for (std::size_t k = 0; k < buf.size(); ++k)
      ASSERT_EQ(int(buf.at(k).obs.pixels[0]), inserts - int(buf.size()) + int(k));
  }
}

TEST(ReplayBuffer, SamplesWithoutReplacement) {
  ReplayBuffer buf(100);
  for (int i = 0; i < 100; ++i) buf.push(numbered(i));
  Rng rng(2);
  std::vector<int> hits(100, 0);
  for (int t = 0; t < 2000; ++t) {
    const auto idx = buf.sample_indices(32, rng);
    std::set<std::size_t> uniq(idx.begin(), idx.end());
    ASSERT_EQ(uniq.size(), idx.size());
    for (std::size_t i : idx) {
      ASSERT_LT(i, 100u);
      ++hits[i];
    }
  }
  // Each index is expected 2000 * 32 / 100 = 640 times.
  for (int h : hits) EXPECT_NEAR(h, 640, 120);
  const auto all = buf.sample_indices(100, rng);
  EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), 100u);
  EXPECT_THROW(buf.sample_indices(101, rng), ParameterError);
  EXPECT_THROW(buf.sample_indices(0, rng), ParameterError);
}

TEST(ReplayBuffer, TransitionNormalization) {
  const Transition t = make_transition(Observation(2, 1), sim::ActionCmd(0.2, 0.5), 0.8, Observation(2, 1), false, 2.5);
  EXPECT_DOUBLE_EQ(t.speed_norm01, 0.75);
  EXPECT_DOUBLE_EQ(t.reward_norm01, 0.8);
  EXPECT_DOUBLE_EQ(t.measured_speed_norm01, 0.5);
  const Transition fast = make_transition(Observation(2, 1), sim::ActionCmd(0, -1), 0.0, Observation(2, 1), true, 9.0);
  EXPECT_DOUBLE_EQ(fast.speed_norm01, 0.0);
  EXPECT_DOUBLE_EQ(fast.measured_speed_norm01, 1.0);
}

TEST(CriticTarget, TerminalAndZeroDiscount) {
  Rng rng(3);
  Agent agent(small_policy(), small_critic(), 0.3, rng);
  Batch b = random_batch(8, rng);
  const Tensor eps = noise(8, rng);
  const auto y0 = critic_target(b, agent, 0.3, 0.0, eps);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(y0[i], b.reward[i]);
  b.done.assign(8, 1.0);
  const auto y1 = critic_target(b, agent, 0.3, 0.98, eps);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(y1[i], b.reward[i]);
  EXPECT_THROW(critic_target(b, agent, 0.3, 0.98, noise(7, rng)), ShapeError);
  Batch empty;
  EXPECT_THROW(critic_target(empty, agent, 0.3, 0.98, Tensor({0, 2})), ParameterError);
}

TEST(CriticTarget, HandComputedBellmanBackup) {
  // Two states A -> B -> terminal. The actor ignores its input; each target
  // critic is linear in [pixel0, pixel1, steer, speed].
  Rng rng(4);
  Agent agent(tiny_spec(nn::Head::gaussian_policy), tiny_spec(nn::Head::q_value), 0.3, rng);
  set_values(agent.actor, "dense0.weight", std::vector<double>(8, 0.0));
  set_values(agent.actor, "dense0.bias", {0.3, -0.2, -0.5, 0.4});
  set_values(agent.q1_target, "dense0.weight", {1.0, -0.5, 0.7, 0.2});
  set_values(agent.q1_target, "dense0.bias", {0.1});
  set_values(agent.q2_target, "dense0.weight", {0.8, 0.1, -0.3, 0.6});
  set_values(agent.q2_target, "dense0.bias", {-0.05});

  Batch b;
  b.obs = Tensor({2, 1, 1, 2});
  b.next_obs = Tensor({2, 1, 1, 2});
  const double A[2] = {0.2, 0.9}, B[2] = {0.6, 0.4};
  b.obs[0] = Real(A[0]), b.obs[1] = Real(A[1]), b.obs[2] = Real(B[0]), b.obs[3] = Real(B[1]);
  b.next_obs[0] = Real(B[0]), b.next_obs[1] = Real(B[1]), b.next_obs[2] = Real(0.0), b.next_obs[3] = Real(0.0);
  b.action = Tensor({2, 2});
  b.reward = {0.4, 0.9};
  b.done = {0.0, 1.0};
  const Tensor eps = matrix(2, 2, {0.5, -1.2, 0.0, 0.0});
  const double alpha = 0.25, gamma = 0.9;
  const auto y = critic_target(b, agent, alpha, gamma, eps);

  const double mean[2] = {0.3, -0.2};
  const double log_std[2] = {double(nn::squash_log_std(Real(-0.5))), double(nn::squash_log_std(Real(0.4)))};
  double a[2], logp = 0.0;
  for (int j = 0; j < 2; ++j) {
    const double e = double(eps[j]);
    a[j] = std::tanh(mean[j] + std::exp(log_std[j]) * e);
    logp += -0.5 * e * e - 0.5 * std::log(2 * std::numbers::pi) - log_std[j] - std::log(1 - a[j] * a[j]);
  }
  const double q1 = 0.1 + 1.0 * B[0] - 0.5 * B[1] + 0.7 * a[0] + 0.2 * a[1];
  const double q2 = -0.05 + 0.8 * B[0] + 0.1 * B[1] - 0.3 * a[0] + 0.6 * a[1];
  EXPECT_NEAR(y[0], 0.4 + gamma * (std::min(q1, q2) - alpha * logp), 1e-5);
  EXPECT_EQ(y[1], 0.9);
}

TEST(CriticUpdate, ZeroLossAtTargets) {
  Rng rng(5);
  Agent agent(small_policy(), small_critic(), 0.3, rng);
  agent.q2 = agent.q1;
  const Batch b = random_batch(6, rng);
  const Tensor pred = agent.critic_net.forward(agent.q1, b.obs, &b.action);
  const std::vector<double> targets(pred.values.begin(), pred.values.end());
  const CriticLoss l = critic_loss(b, agent, targets);
  EXPECT_EQ(l.loss, 0.0);
  for (const auto& g : l.grad_q1)
    for (Real v : g.values) ASSERT_EQ(v, Real(0));
  EXPECT_THROW(critic_loss(b, agent, std::vector<double>(5, 0.0)), ShapeError);
}

TEST(CriticUpdate, SingleParameterAdamStep) {
  // Zero observation and action: each critic reduces to its output bias.
  Rng rng(6);
  Agent agent(tiny_spec(nn::Head::gaussian_policy), tiny_spec(nn::Head::q_value), 0.3, rng);
  set_values(agent.q1, "dense0.bias", {1.0});
  set_values(agent.q2, "dense0.bias", {-0.5});
  const Tensor w1 = agent.q1.find("dense0.weight").value;
  Batch b;
  b.obs = Tensor({1, 1, 1, 2});
  b.next_obs = b.obs;
  b.action = Tensor({1, 2});
  b.reward = {0.0};
  b.done = {0.0};
  nn::AdamConfig adam;
  adam.lr = 0.01;
  const double y = 0.25;
  const double loss = critic_update(b, agent, {y}, adam);
  EXPECT_NEAR(loss, (1.0 - y) * (1.0 - y) + (-0.5 - y) * (-0.5 - y), 1e-6);
  // The first bias-corrected Adam step has magnitude lr against the gradient sign.
  EXPECT_NEAR(agent.q1.find("dense0.bias").value[0], 1.0 - 0.01, 1e-6);
  EXPECT_NEAR(agent.q2.find("dense0.bias").value[0], -0.5 + 0.01, 1e-6);
  EXPECT_EQ(agent.q1.find("dense0.weight").value, w1);
}

TEST(CriticUpdate, LossDecreasesOnFixedBatch) {
  Rng rng(7);
  Agent agent(small_policy(), small_critic(), 0.3, rng);
  const Batch b = random_batch(16, rng);
  std::vector<double> targets(16);
  for (double& t : targets) t = rng.uniform(-1, 1);
  nn::AdamConfig adam;
  adam.lr = 1e-3;
  double prev = critic_loss(b, agent, targets).loss;
  int decreases = 0;
  for (int i = 0; i < 100; ++i) {
    critic_update(b, agent, targets, adam);
    const double now = critic_loss(b, agent, targets).loss;
    decreases += now < prev;
    prev = now;
  }
  EXPECT_GE(decreases, 90);
}

TEST(ActorObjective, ZeroWeightsMatchVanilla) {
  Rng rng(8);
  Agent agent(small_policy(), small_critic(), 0.3, rng);
  const Batch b = random_batch(8, rng);
  const Tensor eps = noise(8, rng);
  reg::RegConfig none = reg::RegConfig::preset(reg::Hook::none);
  reg::RegConfig iras = reg::RegConfig::preset(reg::Hook::iras);
  iras.lambda_T = iras.lambda_S = 0.0;
  const Tensor similar = reg::similar_states(b.obs, iras, rng);
  ActorInputs in{0.3, &eps, &similar, &none};
  const ActorLoss a = actor_objective(b, agent, in);
  in.reg = &iras;
  const ActorLoss c = actor_objective(b, agent, in);
  EXPECT_LT(std::abs(a.loss - c.loss), 1e-7);
  EXPECT_EQ(a.sac_loss, c.sac_loss);
  EXPECT_EQ(c.penalty.penalty_total, 0.0);
  EXPECT_GT(c.penalty.L_T, 0.0);
  ASSERT_EQ(a.grad.size(), c.grad.size());
  for (std::size_t i = 0; i < a.grad.size(); ++i) EXPECT_EQ(a.grad[i], c.grad[i]) << i;
  EXPECT_EQ(a.loss, a.sac_loss);
}

TEST(ActorObjective, PenaltyPositiveOnDistinctStates) {
  Rng rng(9);
  Agent agent(small_policy(), small_critic(), 0.3, rng);
  Batch b = random_batch(8, rng);
  b.done.assign(8, 0.0);
  const Tensor eps = noise(8, rng);
  reg::RegConfig cfg;
  cfg.mode = reg::RegMode::temporal_only;
  ActorInputs in{0.3, &eps, nullptr, &cfg};
  const ActorLoss l = actor_objective(b, agent, in);
  EXPECT_GT(l.penalty.penalty_total, 0.0);
  EXPECT_NEAR(l.loss, l.sac_loss + l.penalty.penalty_total, 1e-12);

  // Identical consecutive observations leave nothing to penalize.
  b.next_obs = b.obs;
  EXPECT_EQ(actor_objective(b, agent, in).penalty.penalty_total, 0.0);

  cfg.mode = reg::RegMode::spatial_only;
  EXPECT_THROW(actor_objective(b, agent, in), ShapeError);
  in.reg = nullptr;
  EXPECT_THROW(actor_objective(b, agent, in), ParameterError);
}

TEST(AlphaUpdate, SignOfStep) {
  Rng rng(10);
  nn::AdamConfig adam;
  adam.lr = 0.01;
  Agent at(small_policy(), small_critic(), 0.3, rng);
  EXPECT_NEAR(alpha_update(at, 2.0, -2.0, adam), 0.3, 1e-7);
  Agent above = at, below = at;
  // Entropy -log pi = 3 above the target -2: alpha shrinks.
  EXPECT_LT(alpha_update(above, -3.0, -2.0, adam), 0.3);
  // Entropy -1 below the target 0: alpha grows.
  EXPECT_GT(alpha_update(below, 1.0, 0.0, adam), 0.3);
}

TEST(Train, ZeroStepsGivesInitialCheckpoint) {
  const TrainSetup s = small_setup(1, 0);
  const TrainResult r = train(s);
  EXPECT_TRUE(r.log.empty());
  EXPECT_EQ(r.updates, 0);
  EXPECT_EQ(r.checkpoint.step, 0);
  EXPECT_NEAR(std::exp(r.checkpoint.scalar("log_alpha")), 0.3, 1e-6);
}

TEST(Train, DeterministicForFixedSeed) {
  const TrainSetup s = small_setup(7, 150);
  const TrainResult a = train(s), b = train(s);
  ASSERT_EQ(a.log.size(), 6u);
  ASSERT_EQ(a.log.size(), b.log.size());
  // Rows before the first update carry NaN losses, so compare the serialized logs.
  std::stringstream la, lb;
  write_log_csv(la, a.log);
  write_log_csv(lb, b.log);
  EXPECT_EQ(la.str(), lb.str());
  for (const auto& row : a.log) EXPECT_GT(row.alpha, 0.0);
  EXPECT_TRUE(std::isfinite(a.log.back().critic_loss));
  EXPECT_GT(a.updates, 0);
  EXPECT_EQ(a.checkpoint.network("actor").params.flatten(), b.checkpoint.network("actor").params.flatten());
  const TrainResult c = train(small_setup(8, 150));
  EXPECT_NE(a.checkpoint.network("actor").params.flatten(), c.checkpoint.network("actor").params.flatten());
}

TEST(Train, ZeroWeightRegularizerIsBitIdentical) {
  TrainSetup plain = small_setup(3, 100);
  TrainSetup zero = plain;
  zero.reg = reg::RegConfig::preset(reg::Hook::iras_ir);
  zero.reg.lambda_T = zero.reg.lambda_S = 0.0;
  const TrainResult a = train(plain), b = train(zero);
  for (const auto& name : {"actor", "critic1", "critic2", "critic1_target", "critic2_target"})
    EXPECT_EQ(a.checkpoint.network(name).params.flatten(), b.checkpoint.network(name).params.flatten()) << name;
  EXPECT_EQ(a.checkpoint.scalar("log_alpha"), b.checkpoint.scalar("log_alpha"));
}

TEST(Train, TargetsMoveOnlyByTauBlend) {
  // Replays the learner's last soft update from the final networks.
  TrainSetup s = small_setup(4, 60);
  s.sac.warmup_steps = 59;
  const TrainResult r = train(s);
  ASSERT_EQ(r.updates, 1);
  const auto& q1 = r.checkpoint.network("critic1").params;
  const auto& q1t = r.checkpoint.network("critic1_target").params;
  const TrainResult init = train(small_setup(4, 0));
  nn::ParamSet expect = init.checkpoint.network("critic1_target").params;
  nn::soft_update(expect, q1, s.sac.tau);
  EXPECT_EQ(expect.flatten(), q1t.flatten());
}

TEST(Train, LogCsvRoundTrip) {
  const TrainResult r = train(small_setup(5, 60));
  std::stringstream ss;
  write_log_csv(ss, r.log);
  const auto back = read_log_csv(ss);
  ASSERT_EQ(back.size(), r.log.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].step, r.log[i].step);
    EXPECT_EQ(back[i].alpha, r.log[i].alpha);
    EXPECT_TRUE(std::isnan(back[i].eval_return));
  }
}

TEST(Train, InvalidSetups) {
  TrainSetup s = small_setup(1, 10);
  s.sac.gamma = 1.0;
  EXPECT_THROW(train(s), ConfigError);
  s = small_setup(1, 10);
  s.sac.batch_size = 1000;
  EXPECT_THROW(train(s), ConfigError);
  s = small_setup(1, 10);
  s.eval_every = 5;
  s.n_eval_runs = 0;
  EXPECT_THROW(train(s), ParameterError);
}
