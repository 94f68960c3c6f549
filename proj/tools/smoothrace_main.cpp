#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smoothrace/error.hpp"
#include "smoothrace/experiment/commands.hpp"
#include "smoothrace/experiment/config.hpp"
#include "smoothrace/metrics/evaluate.hpp"
#include "smoothrace/sim/track.hpp"

namespace sx = smoothrace::experiment;
namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> steps;
  std::optional<std::string> out;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Override the config seed");
  cmd->add_option("--steps", o.steps, "Override total environment steps");
  cmd->add_option("--out", o.out, "Output directory (default: config output_dir)");
}

sx::ExperimentConfig load_with(const std::string& path, const Overrides& o) {
  sx::ExperimentConfig cfg = sx::load_config(path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.steps) cfg.total_steps = *o.steps;
  if (o.out) cfg.output_dir = *o.out;
  cfg.validate();
  return cfg;
}

void print_log_row(const smoothrace::sac::LogRow& r) {
  std::printf("step %lld  critic %.4f  actor %.4f  alpha %.4f  L_T %.4f  L_S %.4f  lambda_IR %.3f",
              static_cast<long long>(r.step), r.critic_loss, r.actor_loss, r.alpha, r.mean_L_T, r.mean_L_S,
              r.mean_lambda_IR);
  if (r.eval_return == r.eval_return) std::printf("  eval_return %.3f  eval_success %.2f", r.eval_return, r.eval_success);
  std::printf("\n");
  std::fflush(stdout);
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::string item;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == ',') {
      if (item.empty()) throw smoothrace::ParameterError("empty entry in seed list '" + text + "'");
      seeds.push_back(std::stoull(item));
      item.clear();
    } else {
      item += text[i];
    }
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smoothrace: action-smoothness regularized SAC on a 2D racing simulator"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;

  auto* train = app.add_subcommand("train", "Train an agent from a config file");
  train->add_option("--config", config_path, "Experiment config (JSON)")->required();
  add_overrides(train, ov);

  std::string checkpoint_path;
  bool shifted = false, allow_mismatch = false;
  std::optional<int> runs;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint_path, "Checkpoint manifest path")->required();
  eval->add_option("--config", config_path, "Experiment config the checkpoint was trained with")->required();
  eval->add_flag("--shifted", shifted, "Evaluate under the config's observation shift");
  eval->add_flag("--allow-hash-mismatch", allow_mismatch, "Evaluate even if the config hash differs");
  eval->add_option("--runs", runs, "Number of evaluation runs (default: n_eval_runs)");
  eval->add_option("--seed", ov.seed, "Evaluation seed (default: config seed)");
  eval->add_option("--out", ov.out, "Output directory (default: config output_dir)");

  std::string suite_name, seeds_text = "1,2,3";
  auto* ablate = app.add_subcommand("ablate", "Run an ablation suite and write its comparison table");
  ablate->add_option("--suite", suite_name, "iras_components or spatial_transforms")->required();
  ablate->add_option("--config", config_path, "Base experiment config")->required();
  ablate->add_option("--seeds", seeds_text, "Comma-separated training seeds");
  ablate->add_option("--steps", ov.steps, "Override total environment steps");
  ablate->add_option("--out", ov.out, "Output directory (default: config output_dir)");

  std::string log_path, figures_out;
  double sample_rate = 30.0;
  auto* figures = app.add_subcommand("export-figures", "Export per-episode steering series, spectra and plots");
  figures->add_option("--log", log_path, "Action log CSV")->required();
  figures->add_option("--out", figures_out, "Output directory")->required();
  figures->add_option("--sample-rate", sample_rate, "Control rate in Hz");

  std::string preset = "oval", track_out;
  double half_width = 0.6;
  auto* track = app.add_subcommand("make-track", "Write a track preset as a centerline table");
  track->add_option("--preset", preset, "oval, s_curve or paper_like_loop");
  track->add_option("--half-width", half_width, "Track half width in meters");
  track->add_option("--out", track_out, "Output file (default: stdout)");

  std::string default_out;
  auto* defaults = app.add_subcommand("default-config", "Write the default experiment config");
  defaults->add_option("--out", default_out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    sx::apply_thread_cap();

    if (*train) {
      const sx::ExperimentConfig cfg = load_with(config_path, ov);
      const sx::RunManifest m = sx::cmd_train(cfg, cfg.output_dir, print_log_row);
      std::cout << "config_hash: " << m.config_hash << "\n";
      if (m.final_report) smoothrace::metrics::write_report_text(std::cout, *m.final_report);
      std::cout << "manifest: " << (fs::path(cfg.output_dir) / "manifest.json").string() << "\n";
    } else if (*eval) {
      const sx::ExperimentConfig cfg = sx::load_config(config_path);
      sx::EvalOptions opts;
      opts.shifted = shifted;
      opts.allow_hash_mismatch = allow_mismatch;
      opts.seed = ov.seed;
      opts.runs = runs;
      const auto out = sx::cmd_eval(checkpoint_path, cfg, ov.out.value_or(cfg.output_dir), opts);
      smoothrace::metrics::write_report_text(std::cout, out.result.report);
      for (const auto& f : out.files) std::cout << "wrote " << f.string() << "\n";
    } else if (*ablate) {
      const sx::ExperimentConfig cfg = load_with(config_path, ov);
      const auto suite = sx::parse_ablation_suite(suite_name);
      const auto table = sx::cmd_ablate(suite, cfg, parse_seeds(seeds_text), cfg.output_dir);
      sx::write_ablation_table(std::cout, table);
    } else if (*figures) {
      std::ifstream in(log_path);
      if (!in) throw smoothrace::FileError("cannot open action log " + log_path);
      const auto log = smoothrace::metrics::read_action_log_csv(in, sample_rate);
      const auto ex = sx::cmd_export_figures(log, figures_out);
      if (ex.empty()) {
        std::cerr << "warning: no completed episodes in " << log_path << "; nothing exported\n";
      } else {
        std::cout << "exported " << ex.series << " series for " << ex.completed_episodes << " completed episodes to "
                  << figures_out << "\n";
      }
    } else if (*track) {
      const auto t = smoothrace::sim::make_track(smoothrace::sim::parse_track_preset(preset), half_width);
      if (track_out.empty()) {
        smoothrace::sim::write_track(std::cout, t);
      } else {
        std::ofstream out(track_out);
        if (!out) throw smoothrace::FileError("cannot write " + track_out);
        smoothrace::sim::write_track(out, t);
      }
    } else if (*defaults) {
      const std::string text = sx::to_text(sx::ExperimentConfig{});
      if (default_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(default_out);
        if (!out) throw smoothrace::FileError("cannot write " + default_out);
        out << text;
      }
    }
  } catch (const smoothrace::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return smoothrace::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
