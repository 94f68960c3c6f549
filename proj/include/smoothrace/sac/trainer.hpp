#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "smoothrace/error.hpp"
#include "smoothrace/nn/checkpoint.hpp"
#include "smoothrace/nn/network.hpp"
#include "smoothrace/reg/regularizers.hpp"
#include "smoothrace/sac/config.hpp"
#include "smoothrace/sim/env.hpp"
#include "smoothrace/xform/transforms.hpp"

namespace smoothrace::sac {

using EnvFactory = std::function<sim::Env(int worker)>;

struct TrainSetup {
  EnvFactory make_env;
  /// Environment used for periodic evaluation (deterministic policy).
  EnvFactory make_eval_env;
  SACConfig sac;
  reg::RegConfig reg;
  nn::NetworkSpec actor_spec;
  nn::NetworkSpec critic_spec;
  bool randconv = false;
  double randconv_prob = 0.5;
  std::vector<int> randconv_kernels{1, 3, 5, 7};
  std::uint64_t seed = 0;
  std::int64_t total_steps = 0;
  std::int64_t eval_every = 0;  // 0 disables periodic evaluation
  std::int64_t log_every = 1000;
  int n_eval_runs = 0;
  std::string config_hash;
};

struct LogRow {
  std::int64_t step = 0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
  double mean_L_T = 0.0;
  double mean_L_S = 0.0;
  double mean_lambda_IR = 0.0;
  double eval_return = std::numeric_limits<double>::quiet_NaN();
  double eval_success = std::numeric_limits<double>::quiet_NaN();

  friend bool operator==(const LogRow&, const LogRow&) = default;
};

struct TrainResult {
  nn::Checkpoint checkpoint;
  std::vector<LogRow> log;
  std::int64_t updates = 0;
  std::int64_t episodes = 0;
};

/// Raised when a loss turns non-finite; carries everything up to the failure.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, TrainResult partial)
      : NumericError(what), partial_(std::move(partial)) {}
  const TrainResult& partial() const { return partial_; }

 private:
  TrainResult partial_;
};

/// Rollout workers each own an environment and a local buffer flushed into
/// the global replay buffer at episode end (or when full); a single learner
/// performs all updates. Fully deterministic for a given seed.
TrainResult train(const TrainSetup& setup, const std::function<void(const LogRow&)>& on_log = {});

void write_log_csv(std::ostream& os, const std::vector<LogRow>& rows);
std::vector<LogRow> read_log_csv(std::istream& is);

}  // namespace smoothrace::sac
