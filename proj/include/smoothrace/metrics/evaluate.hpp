#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "smoothrace/image.hpp"
#include "smoothrace/nn/checkpoint.hpp"
#include "smoothrace/sim/env.hpp"

namespace smoothrace::metrics {

/// Terminal label of a logged step; `truncated` marks the step cap.
enum class StepStatus { running, off_track, wrong_direction, lap_complete, truncated };
std::string to_string(StepStatus s);
StepStatus parse_step_status(const std::string& s);

struct ActionRecord {
  std::int64_t step = 0;  // index within the episode
  int episode = 0;
  double steer = 0.0;
  double speed = 0.0;
  double reward = 0.0;
  double progress = 0.0;  // lap progress fraction since the start
  StepStatus terminated = StepStatus::running;

  friend bool operator==(const ActionRecord&, const ActionRecord&) = default;
};

struct ActionLog {
  double sample_rate = 30.0;
  std::vector<ActionRecord> records;

  /// Records grouped by episode id, in order of first appearance.
  std::vector<std::vector<ActionRecord>> episodes() const;
  /// Throws ParameterError if steps within an episode are not consecutive.
  void validate() const;
};

void write_action_log_csv(std::ostream& os, const ActionLog& log);
ActionLog read_action_log_csv(std::istream& is, double sample_rate = 30.0);

struct RunSummary {
  int episode = 0;
  StepStatus outcome = StepStatus::running;
  std::int64_t steps = 0;
  double episode_return = 0.0;
  double lap_time = 0.0;       // seconds, meaningful when completed
  double mean_speed = 0.0;     // measured, m/s
  double steer_sm = 0.0;       // 0 for single-step episodes
  double speed_sm = 0.0;
  double mean_abs_dsteer = 0.0;

  bool completed() const { return outcome == StepStatus::lap_complete; }
};

struct EvalReport {
  int runs = 0;
  int completed = 0;
  double success_rate = 0.0;  // fraction of runs completing a lap
  // Present only when at least one run completed.
  std::optional<double> lap_time_mean;
  std::optional<double> lap_time_std;
  std::optional<double> avg_speed;
  std::optional<double> steer_sm;
  std::optional<double> speed_sm;
  // Over every run, completed or not.
  double steer_sm_all = 0.0;
  double speed_sm_all = 0.0;
  double mean_return = 0.0;
  double mean_abs_dsteer = 0.0;
  std::vector<RunSummary> per_run;
  std::string config_hash;
};

/// Maps the current observation and car state to a command. Must be safe to
/// call from several threads at once.
using Controller = std::function<sim::ActionCmd(const Observation&, const sim::CarState&)>;
using EnvMaker = std::function<sim::Env()>;

struct EvalResult {
  EvalReport report;
  ActionLog log;
};

/// Runs n_runs episodes from the evaluation start. Run i resets with a seed
/// derived from (seed, i); runs execute in parallel and merge by index.
EvalResult run_evaluation(const EnvMaker& make_env, const Controller& controller, int n_runs, std::uint64_t seed);

/// Deterministic (tanh-mean) actor of a checkpoint as a controller.
Controller checkpoint_controller(const nn::Checkpoint& ckpt);
/// Uniform random commands, reproducible per (seed, episode step, position).
Controller random_controller(std::uint64_t seed);

struct EvalSetup {
  sim::Track track;
  sim::RenderParams render;
  double dt = sim::kDefaultDt;
  int max_steps = 600;
  sim::ActuationNoise noise;
};

EvalResult evaluate_policy(const nn::Checkpoint& ckpt, const EvalSetup& setup, int n_runs, std::uint64_t seed);
/// evaluate_policy with a post-render observation shift.
EvalResult domain_shift_evaluate(const nn::Checkpoint& ckpt, const EvalSetup& setup, int n_runs,
                                 std::uint64_t seed, const sim::ObservationShift& shift);

void write_report_text(std::ostream& os, const EvalReport& r);
void write_report_json(std::ostream& os, const EvalReport& r);

}  // namespace smoothrace::metrics
