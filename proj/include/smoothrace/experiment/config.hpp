#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "smoothrace/metrics/evaluate.hpp"
#include "smoothrace/nn/network.hpp"
#include "smoothrace/reg/regularizers.hpp"
#include "smoothrace/sac/config.hpp"
#include "smoothrace/sac/trainer.hpp"
#include "smoothrace/sim/env.hpp"
#include "smoothrace/sim/render.hpp"
#include "smoothrace/sim/track.hpp"

namespace smoothrace::experiment {

inline constexpr int kSchemaVersion = 1;

struct NetworkConfig {
  std::vector<nn::ConvLayerSpec> conv{{8, 3, 2}, {16, 3, 2}, {16, 3, 2}};
  std::vector<int> dense{128, 64};
  nn::Activation activation = nn::Activation::relu;
  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 1;
  std::int64_t total_steps = 20000;
  std::int64_t eval_every = 5000;
  std::int64_t log_every = 1000;
  int n_eval_runs = 10;
  std::string output_dir = "runs/default";

  sim::TrackPreset track = sim::TrackPreset::oval;
  double half_width = 0.6;
  double dt = sim::kDefaultDt;
  int max_steps = 600;
  sim::ActuationNoise train_noise;
  sim::ActuationNoise eval_noise{0.1, 0.1};
  sim::RenderParams render;
  /// Perturbation applied by `eval --shifted`.
  sim::ObservationShift shift{0.2, 0.05, false};

  NetworkConfig network;
  sac::SACConfig sac;
  reg::RegConfig reg;
  bool randconv = false;
  double randconv_prob = 0.5;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Every key is required and unknown keys are rejected.
ExperimentConfig from_json(const nlohmann::json& j);

std::string to_text(const ExperimentConfig& cfg);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

/// FNV-1a 64 over the canonical serialization, output_dir excluded; 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

sim::Track build_track(const ExperimentConfig& cfg);
nn::NetworkSpec actor_spec(const ExperimentConfig& cfg);
nn::NetworkSpec critic_spec(const ExperimentConfig& cfg);
sac::TrainSetup build_train_setup(const ExperimentConfig& cfg);
metrics::EvalSetup build_eval_setup(const ExperimentConfig& cfg);

}  // namespace smoothrace::experiment
