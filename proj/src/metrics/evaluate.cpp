#include "smoothrace/metrics/evaluate.hpp"

#include <algorithm>
#include <cstring>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "smoothrace/error.hpp"
#include "smoothrace/metrics/spectrum.hpp"
#include "smoothrace/nn/actor.hpp"

namespace smoothrace::metrics {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

StepStatus status_of(const sim::EnvStep& st) {
  switch (st.outcome.terminated) {
    case sim::Termination::off_track: return StepStatus::off_track;
    case sim::Termination::wrong_direction: return StepStatus::wrong_direction;
    case sim::Termination::lap_complete: return StepStatus::lap_complete;
    case sim::Termination::running: break;
  }
  return st.truncated ? StepStatus::truncated : StepStatus::running;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size()));
}

struct RunTrace {
  RunSummary summary;
  std::vector<ActionRecord> records;
};

RunTrace run_episode(const EnvMaker& make_env, const Controller& controller, int episode, std::uint64_t seed) {
  sim::Env env = make_env();
  Observation obs = env.reset(sim::ResetMode::evaluation, seed);
  RunTrace t;
  t.summary.episode = episode;
  std::vector<double> steer, speed;
  double speed_sum = 0.0;
  const double length = env.track().length();
  for (;;) {
    const sim::ActionCmd cmd = controller(obs, env.state());
    const sim::EnvStep st = env.step(cmd);
    const sim::CarState& s = st.outcome.next_state;
    ActionRecord r;
    r.step = std::int64_t(t.records.size());
    r.episode = episode;
    r.steer = cmd.steer_norm;
    r.speed = cmd.speed_norm;
    r.reward = st.outcome.reward;
    r.progress = s.lap_progress / length;
    r.terminated = status_of(st);
    t.records.push_back(r);
    steer.push_back(cmd.steer_norm);
    speed.push_back(cmd.speed_norm);
    speed_sum += s.speed;
    t.summary.episode_return += st.outcome.reward;
    if (st.done()) {
      t.summary.outcome = r.terminated;
      break;
    }
    obs = st.outcome.observation;
  }
  RunSummary& sum = t.summary;
  sum.steps = std::int64_t(t.records.size());
  sum.lap_time = double(sum.steps) * env.dt();
  sum.mean_speed = speed_sum / double(sum.steps);
  const double fs = 1.0 / env.dt();
  if (steer.size() >= 2) {
    sum.steer_sm = smoothness(steer, fs);
    sum.speed_sm = smoothness(speed, fs);
    double d = 0.0;
    for (std::size_t i = 1; i < steer.size(); ++i) d += std::abs(steer[i] - steer[i - 1]);
    sum.mean_abs_dsteer = d / double(steer.size() - 1);
  }
  return t;
}

}  // namespace

std::string to_string(StepStatus s) {
  switch (s) {
    case StepStatus::running: return "running";
    case StepStatus::off_track: return "off_track";
    case StepStatus::wrong_direction: return "wrong_direction";
    case StepStatus::lap_complete: return "lap_complete";
    case StepStatus::truncated: return "truncated";
  }
  return "?";
}

StepStatus parse_step_status(const std::string& s) {
  for (auto v : {StepStatus::running, StepStatus::off_track, StepStatus::wrong_direction, StepStatus::lap_complete,
                 StepStatus::truncated})
    if (to_string(v) == s) return v;
  throw ParameterError("unknown termination label: " + s);
}

std::vector<std::vector<ActionRecord>> ActionLog::episodes() const {
  std::vector<std::vector<ActionRecord>> out;
  std::map<int, std::size_t> slot;
  for (const auto& r : records) {
    auto [it, inserted] = slot.emplace(r.episode, out.size());
    if (inserted) out.emplace_back();
    out[it->second].push_back(r);
  }
  return out;
}

void ActionLog::validate() const {
  if (!(sample_rate > 0.0)) throw ParameterError("sample rate must be positive");
  for (const auto& ep : episodes())
    for (std::size_t i = 1; i < ep.size(); ++i)
      if (ep[i].step != ep[i - 1].step + 1)
        throw ParameterError("episode " + std::to_string(ep[i].episode) + " has non-consecutive steps");
}

void write_action_log_csv(std::ostream& os, const ActionLog& log) {
  os << "step,episode,steer,speed,reward,progress,terminated\n";
  os << std::setprecision(17);
  for (const auto& r : log.records)
    os << r.step << ',' << r.episode << ',' << r.steer << ',' << r.speed << ',' << r.reward << ',' << r.progress
       << ',' << to_string(r.terminated) << '\n';
}

ActionLog read_action_log_csv(std::istream& is, double sample_rate) {
  ActionLog log;
  log.sample_rate = sample_rate;
  std::string line;
  if (!std::getline(is, line) || line != "step,episode,steer,speed,reward,progress,terminated")
    throw FileError("action log has an unexpected header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell[7];
    for (int i = 0; i < 7; ++i)
      if (!std::getline(row, cell[i], i < 6 ? ',' : '\n')) throw FileError("malformed action log row: " + line);
    ActionRecord r;
    try {
      r.step = std::stoll(cell[0]);
      r.episode = std::stoi(cell[1]);
      r.steer = std::stod(cell[2]);
      r.speed = std::stod(cell[3]);
      r.reward = std::stod(cell[4]);
      r.progress = std::stod(cell[5]);
    } catch (const std::logic_error&) {
      throw FileError("malformed action log row: " + line);
    }
    r.terminated = parse_step_status(cell[6]);
    log.records.push_back(r);
  }
  log.validate();
  return log;
}

EvalResult run_evaluation(const EnvMaker& make_env, const Controller& controller, int n_runs, std::uint64_t seed) {
  if (n_runs < 1) throw ParameterError("n_runs must be at least 1");
  std::vector<RunTrace> traces(n_runs);
  std::vector<std::exception_ptr> errors(n_runs);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n_runs; ++i) {
    try {
      traces[i] = run_episode(make_env, controller, i, splitmix(seed ^ splitmix(std::uint64_t(i) + 1)));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  EvalResult out;
  EvalReport& rep = out.report;
  rep.runs = n_runs;
  std::vector<double> lap, spd, ssm, vsm, ssm_all, vsm_all, ret, dsteer;
  for (auto& t : traces) {
    const RunSummary& s = t.summary;
    if (s.completed()) {
      ++rep.completed;
      lap.push_back(s.lap_time);
      spd.push_back(s.mean_speed);
      ssm.push_back(s.steer_sm);
      vsm.push_back(s.speed_sm);
    }
    ssm_all.push_back(s.steer_sm);
    vsm_all.push_back(s.speed_sm);
    ret.push_back(s.episode_return);
    dsteer.push_back(s.mean_abs_dsteer);
    rep.per_run.push_back(s);
    out.log.records.insert(out.log.records.end(), t.records.begin(), t.records.end());
  }
  rep.success_rate = double(rep.completed) / double(n_runs);
  if (rep.completed > 0) {
    rep.lap_time_mean = mean_of(lap);
    rep.lap_time_std = std_of(lap);
    rep.avg_speed = mean_of(spd);
    rep.steer_sm = mean_of(ssm);
    rep.speed_sm = mean_of(vsm);
  }
  rep.steer_sm_all = mean_of(ssm_all);
  rep.speed_sm_all = mean_of(vsm_all);
  rep.mean_return = mean_of(ret);
  rep.mean_abs_dsteer = mean_of(dsteer);
  return out;
}

Controller checkpoint_controller(const nn::Checkpoint& ckpt) {
  const auto& named = ckpt.network("actor");
  auto net = std::make_shared<nn::Network>(named.spec);
  auto params = std::make_shared<nn::ParamSet>(named.params);
  return [net, params](const Observation& obs, const sim::CarState&) {
    const auto a = nn::ActorPolicy(*net, *params).act(obs, true);
    return sim::ActionCmd(a[0], a[1]);
  };
}

Controller random_controller(std::uint64_t seed) {
  return [seed](const Observation&, const sim::CarState& s) {
    std::uint64_t px, py;
    std::memcpy(&px, &s.position.x, sizeof px);
    std::memcpy(&py, &s.position.y, sizeof py);
    Rng rng(splitmix(seed ^ splitmix(px ^ splitmix(py))), std::uint64_t(s.step_index));
    return sim::ActionCmd(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  };
}

EvalResult evaluate_policy(const nn::Checkpoint& ckpt, const EvalSetup& setup, int n_runs, std::uint64_t seed) {
  return domain_shift_evaluate(ckpt, setup, n_runs, seed, {});
}

EvalResult domain_shift_evaluate(const nn::Checkpoint& ckpt, const EvalSetup& setup, int n_runs, std::uint64_t seed,
                                 const sim::ObservationShift& shift) {
  EnvMaker make = [&setup, shift] {
    return sim::Env(setup.track, setup.render, setup.dt, setup.max_steps, shift, setup.noise);
  };
  EvalResult r = run_evaluation(make, checkpoint_controller(ckpt), n_runs, seed);
  r.log.sample_rate = 1.0 / setup.dt;
  r.report.config_hash = ckpt.config_hash;
  return r;
}

void write_report_text(std::ostream& os, const EvalReport& r) {
  auto opt = [&](const char* key, const std::optional<double>& v) {
    os << key << ": ";
    if (v) os << *v;
    else os << "absent";
    os << '\n';
  };
  os << std::setprecision(6);
  os << "config_hash: " << r.config_hash << '\n';
  os << "runs: " << r.runs << '\n';
  os << "completed: " << r.completed << '\n';
  os << "success_rate: " << r.success_rate * 100.0 << "%\n";
  opt("lap_time_mean_s", r.lap_time_mean);
  opt("lap_time_std_s", r.lap_time_std);
  opt("avg_speed_mps", r.avg_speed);
  opt("steering_sm", r.steer_sm);
  opt("speed_sm", r.speed_sm);
  os << "steering_sm_all_runs: " << r.steer_sm_all << '\n';
  os << "speed_sm_all_runs: " << r.speed_sm_all << '\n';
  os << "mean_return: " << r.mean_return << '\n';
  os << "mean_abs_dsteer: " << r.mean_abs_dsteer << '\n';
}

void write_report_json(std::ostream& os, const EvalReport& r) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j;
  j["config_hash"] = r.config_hash;
  j["runs"] = r.runs;
  j["completed"] = r.completed;
  j["success_rate"] = r.success_rate;
  j["lap_time_mean_s"] = opt(r.lap_time_mean);
  j["lap_time_std_s"] = opt(r.lap_time_std);
  j["avg_speed_mps"] = opt(r.avg_speed);
  j["steering_sm"] = opt(r.steer_sm);
  j["speed_sm"] = opt(r.speed_sm);
  j["steering_sm_all_runs"] = r.steer_sm_all;
  j["speed_sm_all_runs"] = r.speed_sm_all;
  j["mean_return"] = r.mean_return;
  j["mean_abs_dsteer"] = r.mean_abs_dsteer;
  json runs = json::array();
  for (const auto& s : r.per_run)
    runs.push_back({{"episode", s.episode},
                    {"outcome", to_string(s.outcome)},
                    {"steps", s.steps},
                    {"return", s.episode_return},
                    {"lap_time_s", s.lap_time},
                    {"mean_speed_mps", s.mean_speed},
                    {"steering_sm", s.steer_sm},
                    {"speed_sm", s.speed_sm},
                    {"mean_abs_dsteer", s.mean_abs_dsteer}});
  j["per_run"] = std::move(runs);
  os << j.dump(2) << '\n';
}

}  // namespace smoothrace::metrics
