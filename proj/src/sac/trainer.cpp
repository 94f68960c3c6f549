#include "smoothrace/sac/trainer.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "smoothrace/metrics/evaluate.hpp"
#include "smoothrace/nn/actor.hpp"
#include "smoothrace/sac/agent.hpp"
#include "smoothrace/sac/replay.hpp"

namespace smoothrace::sac {

namespace {

// Independent random streams; adding consumers to one never shifts another.
enum Stream : std::uint64_t {
  kInit = 1,
  kSample = 2,
  kPolicyNoise = 3,
  kSimilar = 4,
  kAugment = 5,
  kEval = 6,
  kWorkerBase = 100,
};

struct Worker {
  sim::Env env;
  Rng rng;
  Observation obs;
  std::vector<Transition> local;
  std::uint64_t episodes = 0;
  int id = 0;
};

struct Accumulator {
  double critic = 0.0, actor = 0.0, lt = 0.0, ls = 0.0, lir = 0.0;
  std::int64_t n = 0;
  void add(double c, double a, const reg::SmoothLossReport& r) {
    critic += c;
    actor += a;
    lt += r.L_T;
    ls += r.L_S;
    lir += r.lambda_IR_mean;
    ++n;
  }
};

nn::Tensor noise_tensor(std::size_t n, int ad, Rng& rng) {
  nn::Tensor t({n, std::size_t(ad)});
  for (Real& v : t.values) v = static_cast<Real>(rng.normal());
  return t;
}

void augment_row(nn::Tensor& batch, std::size_t i, const xform::RandomKernel& kernel) {
  const std::size_t h = batch.dim(2), w = batch.dim(3);
  Image img;
  img.width = int(w);
  img.height = int(h);
  auto row = batch.row(i);
  img.pixels.assign(row.begin(), row.end());
  const Image out = xform::convolve_rescale(img, kernel.weights, kernel.k);
  std::copy(out.pixels.begin(), out.pixels.end(), row.begin());
}

double eval_return(const TrainSetup& setup, const Agent& agent, std::int64_t step, double* success) {
  nn::Checkpoint ck;
  ck.networks.push_back({"actor", agent.actor_net.spec(), agent.actor});
  metrics::EnvMaker make = [&setup] { return setup.make_eval_env(0); };
  Rng eval_rng(setup.seed, kEval);
  const auto r = metrics::run_evaluation(make, metrics::checkpoint_controller(ck), setup.n_eval_runs,
                                         eval_rng.next() ^ std::uint64_t(step));
  *success = r.report.success_rate;
  return r.report.mean_return;
}

}  // namespace

TrainResult train(const TrainSetup& setup, const std::function<void(const LogRow&)>& on_log) {
  setup.sac.validate();
  setup.reg.validate();
  if (setup.total_steps < 0) throw ParameterError("total_steps must be non-negative");
  if (setup.eval_every < 0 || setup.log_every <= 0) throw ParameterError("log/eval intervals must be positive");
  if (setup.eval_every > 0 && (setup.n_eval_runs < 1 || !setup.make_eval_env))
    throw ParameterError("periodic evaluation needs n_eval_runs >= 1 and an evaluation environment");
  if (!setup.make_env) throw ParameterError("train needs an environment factory");
  if (setup.randconv && !(setup.randconv_prob >= 0.0 && setup.randconv_prob <= 1.0))
    throw ParameterError("randconv_prob must lie in [0,1]");

  const SACConfig& cfg = setup.sac;
  const Rng root(setup.seed);
  Rng init_rng = root.split(kInit);
  Rng sample_rng = root.split(kSample);
  Rng noise_rng = root.split(kPolicyNoise);
  Rng similar_rng = root.split(kSimilar);
  Rng aug_rng = root.split(kAugment);

  Agent agent(setup.actor_spec, setup.critic_spec, cfg.alpha_init, init_rng);
  const int ad = setup.actor_spec.action_dim;
  nn::AdamConfig adam;
  adam.lr = cfg.lr;

  TrainResult result;
  if (setup.total_steps == 0) {
    result.checkpoint = agent.to_checkpoint(0, setup.config_hash);
    return result;
  }

  std::vector<Worker> workers;
  for (int k = 0; k < cfg.workers; ++k) {
    Rng wrng = root.split(kWorkerBase + std::uint64_t(k));
    sim::Env env = setup.make_env(k);
    Worker w{std::move(env), wrng, {}, {}, 0, k};
    w.obs = w.env.reset(sim::ResetMode::training, w.rng.next());
    w.local.reserve(std::size_t(cfg.local_buffer));
    workers.push_back(std::move(w));
  }
  ReplayBuffer buffer(std::size_t(cfg.global_buffer));

  auto flush = [&](Worker& w) {
    for (auto& t : w.local) buffer.push(std::move(t));
    w.local.clear();
  };

  Accumulator acc;
  double credit = 0.0;
  std::int64_t step = 0;

  auto snapshot = [&](std::int64_t at) {
    result.checkpoint = agent.to_checkpoint(at, setup.config_hash);
  };

  auto update = [&] {
    Batch batch = buffer.sample(std::size_t(cfg.batch_size), sample_rng);
    const std::size_t n = batch.size();
    if (setup.randconv) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!aug_rng.bernoulli(setup.randconv_prob)) continue;
        const auto kernel = xform::sample_random_kernel(aug_rng, setup.randconv_kernels);
        augment_row(batch.obs, i, kernel);
        augment_row(batch.next_obs, i, kernel);
      }
    }
    const double alpha = agent.alpha();
    const nn::Tensor target_noise = noise_tensor(n, ad, noise_rng);
    const auto targets = critic_target(batch, agent, alpha, cfg.gamma, target_noise);
    const double closs = critic_update(batch, agent, targets, adam);

    const nn::Tensor actor_noise = noise_tensor(n, ad, noise_rng);
    nn::Tensor similar;
    if (setup.reg.uses_spatial()) similar = reg::similar_states(batch.obs, setup.reg, similar_rng);
    ActorInputs in;
    in.alpha = alpha;
    in.noise = &actor_noise;
    in.similar_obs = setup.reg.uses_spatial() ? &similar : nullptr;
    in.reg = &setup.reg;
    const ActorLoss aloss = actor_objective(batch, agent, in);
    nn::adam_step(agent.actor, aloss.grad, adam);
    alpha_update(agent, aloss.mean_log_prob, cfg.target_entropy, adam);
    nn::soft_update(agent.q1_target, agent.q1, cfg.tau);
    nn::soft_update(agent.q2_target, agent.q2, cfg.tau);
    acc.add(closs, aloss.loss, aloss.penalty);
    ++result.updates;
  };

  auto emit = [&](std::int64_t at) {
    LogRow row;
    row.step = at;
    if (acc.n > 0) {
      const double k = double(acc.n);
      row.critic_loss = acc.critic / k;
      row.actor_loss = acc.actor / k;
      row.mean_L_T = acc.lt / k;
      row.mean_L_S = acc.ls / k;
      row.mean_lambda_IR = acc.lir / k;
    } else {
      row.critic_loss = row.actor_loss = row.mean_L_T = row.mean_L_S = row.mean_lambda_IR =
          std::numeric_limits<double>::quiet_NaN();
    }
    row.alpha = agent.alpha();
    if (setup.eval_every > 0 && (at % setup.eval_every == 0 || at == setup.total_steps))
      row.eval_return = eval_return(setup, agent, at, &row.eval_success);
    acc = {};
    result.log.push_back(row);
    if (on_log) on_log(row);
  };

  try {
    const int nw = cfg.workers;
    std::vector<sim::ActionCmd> cmds(nw);
    std::vector<sim::EnvStep> steps(nw);
    while (step < setup.total_steps) {
      const int active = int(std::min<std::int64_t>(nw, setup.total_steps - step));
      // Choose actions sequentially (worker RNG order is fixed), step environments in parallel.
      for (int k = 0; k < active; ++k) {
        Worker& w = workers[k];
        if (step + k < cfg.warmup_steps) {
          cmds[k] = sim::ActionCmd(w.rng.uniform(-1.0, 1.0), w.rng.uniform(-1.0, 1.0));
        } else {
          const auto a = nn::ActorPolicy(agent.actor_net, agent.actor).act(w.obs, false, &w.rng);
          cmds[k] = sim::ActionCmd(a[0], a[1]);
        }
      }
#pragma omp parallel for schedule(static) if (active > 1)
      for (int k = 0; k < active; ++k) steps[k] = workers[k].env.step(cmds[k]);

      for (int k = 0; k < active; ++k) {
        Worker& w = workers[k];
        const sim::EnvStep& st = steps[k];
        const bool terminal = st.outcome.terminated != sim::Termination::running;
        w.local.push_back(make_transition(w.obs, cmds[k], st.outcome.reward, st.outcome.observation, terminal,
                                          st.outcome.next_state.speed));
        if (st.done()) {
          flush(w);
          ++w.episodes;
          ++result.episodes;
          w.obs = w.env.reset(sim::ResetMode::training, w.rng.next());
        } else {
          w.obs = st.outcome.observation;
          if (w.local.size() >= std::size_t(cfg.local_buffer)) flush(w);
        }
        ++step;

        if (step > cfg.warmup_steps || cfg.warmup_steps == 0) credit += cfg.updates_per_step;
        while (credit >= 1.0 && buffer.size() >= std::size_t(cfg.batch_size)) {
          credit -= 1.0;
          update();
        }
        if (buffer.size() < std::size_t(cfg.batch_size)) credit = std::min(credit, 1.0);
        if (step % setup.log_every == 0 || step == setup.total_steps) emit(step);
      }
    }
  } catch (const NumericError& e) {
    snapshot(step);
    std::ostringstream msg;
    msg << "training aborted at step " << step << " after " << result.updates << " updates: " << e.what();
    throw TrainingAborted(msg.str(), std::move(result));
  }
  snapshot(step);
  return result;
}

void write_log_csv(std::ostream& os, const std::vector<LogRow>& rows) {
  os << "step,critic_loss,actor_loss,alpha,mean_L_T,mean_L_S,mean_lambda_IR,eval_return,eval_success\n";
  os << std::setprecision(17);
  auto cell = [&](double v) {
    if (std::isnan(v)) os << "";
    else os << v;
  };
  for (const auto& r : rows) {
    os << r.step << ',';
    for (double v : {r.critic_loss, r.actor_loss, r.alpha, r.mean_L_T, r.mean_L_S, r.mean_lambda_IR, r.eval_return}) {
      cell(v);
      os << ',';
    }
    cell(r.eval_success);
    os << '\n';
  }
}

std::vector<LogRow> read_log_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) ||
      line != "step,critic_loss,actor_loss,alpha,mean_L_T,mean_L_S,mean_lambda_IR,eval_return,eval_success")
    throw FileError("training log has an unexpected header");
  std::vector<LogRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 9) throw FileError("malformed training log row: " + line);
    auto num = [](const std::string& s) {
      return s.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(s);
    };
    LogRow r;
    r.step = std::stoll(cells[0]);
    r.critic_loss = num(cells[1]);
    r.actor_loss = num(cells[2]);
    r.alpha = num(cells[3]);
    r.mean_L_T = num(cells[4]);
    r.mean_L_S = num(cells[5]);
    r.mean_lambda_IR = num(cells[6]);
    r.eval_return = num(cells[7]);
    r.eval_success = num(cells[8]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace smoothrace::sac
