#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "smoothrace/experiment/config.hpp"
#include "smoothrace/metrics/evaluate.hpp"
#include "smoothrace/sac/trainer.hpp"

namespace smoothrace::experiment {

std::string code_version();

struct RunManifest {
  std::string config_hash;
  std::string code_version;
  std::string started_at;   // UTC, ISO 8601
  std::string finished_at;
  std::string status;       // "completed" or "aborted"
  std::string diagnostic;   // abort reason, empty otherwise
  std::vector<std::string> artifacts;
  std::optional<metrics::EvalReport> final_report;
};

void write_manifest_json(std::ostream& os, const RunManifest& m);
/// Reads back everything except the per-run breakdown of the final report.
RunManifest read_manifest_json(std::istream& is);

/// Trains, then writes config.json, checkpoint.{json,bin}, train_log.csv, the
/// final evaluation (when total_steps > 0 and n_eval_runs > 0) and
/// manifest.json into out_dir. A non-finite loss writes an aborted manifest
/// with the partial checkpoint and log, then rethrows.
RunManifest cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                      const std::function<void(const sac::LogRow&)>& on_log = {});

struct EvalOptions {
  bool shifted = false;
  bool allow_hash_mismatch = false;
  std::optional<std::uint64_t> seed;  // defaults to the config seed
  std::optional<int> runs;            // defaults to n_eval_runs
};

struct EvalOutput {
  metrics::EvalResult result;
  std::vector<std::filesystem::path> files;
};

/// Evaluates a checkpoint under cfg and writes eval_report.{txt,json} and
/// action_log.csv (suffixed _shifted under the domain shift). The checkpoint
/// must carry cfg's hash unless allow_hash_mismatch is set.
EvalOutput cmd_eval(const std::filesystem::path& checkpoint, const ExperimentConfig& cfg,
                    const std::filesystem::path& out_dir, const EvalOptions& opts = {});

enum class AblationSuite { iras_components, spatial_transforms };
std::string to_string(AblationSuite s);
AblationSuite parse_ablation_suite(const std::string& s);

struct AblationVariant {
  std::string label;
  std::string slug;
  ExperimentConfig config;
};

/// The four agents of a suite derived from base: both suites use
/// lambda_T = lambda_S = 1 and the transform source.
std::vector<AblationVariant> ablation_variants(AblationSuite suite, const ExperimentConfig& base);

struct AblationCell {
  std::uint64_t seed = 0;
  metrics::EvalReport report;
};

struct AblationRow {
  std::string label;
  std::vector<AblationCell> per_seed;
};

struct AblationTable {
  AblationSuite suite = AblationSuite::iras_components;
  std::vector<AblationRow> rows;
};

using VariantRunner = std::function<metrics::EvalReport(const ExperimentConfig&, const std::string& slug)>;

AblationTable run_ablation(AblationSuite suite, const ExperimentConfig& base, const std::vector<std::uint64_t>& seeds,
                           const VariantRunner& runner);

/// Pipe table with the columns Agents, Success rate (%), Finish lap time (s),
/// Steering S_m. Cells are means over seeds; lap time is the mean of per-seed
/// means ± the mean of per-seed standard deviations over seeds that completed
/// a lap, and S_m falls back to the all-runs value for seeds without one.
void write_ablation_table(std::ostream& os, const AblationTable& table);
/// One row per (agent, seed) with the unaggregated values.
void write_ablation_per_seed_csv(std::ostream& os, const AblationTable& table);

/// Trains and evaluates every variant for every seed under out_dir, then
/// writes ablation_<suite>.md and ablation_<suite>_per_seed.csv.
AblationTable cmd_ablate(AblationSuite suite, const ExperimentConfig& base, const std::vector<std::uint64_t>& seeds,
                         const std::filesystem::path& out_dir);

struct FigureExport {
  int completed_episodes = 0;
  int series = 0;  // three per completed episode
  std::vector<std::filesystem::path> files;
  std::vector<double> steer_sm;  // per exported episode, from its spectrum
  bool empty() const { return completed_episodes == 0; }
};

/// Per completed episode: steering vs progress, steering change vs progress
/// and the steering spectrum, each as CSV plus an SVG line plot.
FigureExport cmd_export_figures(const metrics::ActionLog& log, const std::filesystem::path& out_dir);

/// Honors SMOOTHRACE_THREADS (a positive integer) by capping OpenMP teams.
/// Returns the cap, or 0 when the variable is unset.
int apply_thread_cap();

}  // namespace smoothrace::experiment
