#include "smoothrace/experiment/commands.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "smoothrace/error.hpp"
#include "smoothrace/metrics/spectrum.hpp"
#include "smoothrace/nn/checkpoint.hpp"
#include "smoothrace/nn/kernels.hpp"

#ifndef SMOOTHRACE_VERSION
#define SMOOTHRACE_VERSION "unknown"
#endif

namespace smoothrace::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  return out;
}

void close_out(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw FileError("failed writing " + path.string());
}

template <class F>
fs::path write_file(const fs::path& path, F body) {
  std::ofstream out = open_out(path);
  body(out);
  close_out(out, path);
  return path;
}

std::optional<double> opt_from(const json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

json report_json(const metrics::EvalReport& r) {
  std::stringstream ss;
  metrics::write_report_json(ss, r);
  return json::parse(ss.str());
}

RunManifest new_manifest(const ExperimentConfig& cfg) {
  RunManifest m;
  m.config_hash = config_hash(cfg);
  m.code_version = code_version();
  m.started_at = utc_now();
  return m;
}

void finish_manifest(RunManifest& m, const fs::path& out_dir) {
  m.finished_at = utc_now();
  write_file(out_dir / "manifest.json", [&](std::ostream& os) { write_manifest_json(os, m); });
}

void save_training_outputs(const sac::TrainResult& r, const fs::path& out_dir, RunManifest& m) {
  for (const auto& p : nn::save_checkpoint(r.checkpoint, out_dir / "checkpoint")) m.artifacts.push_back(p.string());
  m.artifacts.push_back(
      write_file(out_dir / "train_log.csv", [&](std::ostream& os) { sac::write_log_csv(os, r.log); }).string());
}

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / double(v.size());
}

std::string csv_opt(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os << std::setprecision(10) << *v;
  return os.str();
}

// Minimal line plot: axes box, min/max tick labels, one polyline.
void write_svg_plot(std::ostream& os, const std::string& title, const std::string& xlabel, const std::string& ylabel,
                    const std::vector<double>& xs, const std::vector<double>& ys) {
  const double W = 640, H = 360, L = 70, R = 20, T = 40, B = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!xs.empty()) {
    x0 = *std::min_element(xs.begin(), xs.end());
    x1 = *std::max_element(xs.begin(), xs.end());
    y0 = *std::min_element(ys.begin(), ys.end());
    y1 = *std::max_element(ys.begin(), ys.end());
  }
  if (x1 - x0 < 1e-12) x1 = x0 + 1.0;
  if (y1 - y0 < 1e-12) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
     << xlabel << "</text>\n";
  os << "<text x=\"14\" y=\"" << (T + H - B) / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << (T + H - B) / 2
     << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  os << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\" font-size=\"10\">" << x0 << "</text>\n";
  os << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" font-size=\"10\" text-anchor=\"end\">" << x1
     << "</text>\n";
  os << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" font-size=\"10\" text-anchor=\"end\">" << y0 << "</text>\n";
  os << "<text x=\"" << L - 4 << "\" y=\"" << T + 10 << "\" font-size=\"10\" text-anchor=\"end\">" << y1
     << "</text>\n";
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? " " : "") << px(xs[i]) << ',' << py(ys[i]);
  os << "\"/>\n</svg>\n";
}

void write_series_csv(std::ostream& os, const char* xname, const char* yname, const std::vector<double>& xs,
                      const std::vector<double>& ys) {
  os << std::setprecision(17) << xname << ',' << yname << '\n';
  for (std::size_t i = 0; i < xs.size(); ++i) os << xs[i] << ',' << ys[i] << '\n';
}

}  // namespace

std::string code_version() { return SMOOTHRACE_VERSION; }

void write_manifest_json(std::ostream& os, const RunManifest& m) {
  json j;
  j["config_hash"] = m.config_hash;
  j["code_version"] = m.code_version;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["status"] = m.status;
  j["diagnostic"] = m.diagnostic;
  j["artifacts"] = m.artifacts;
  j["final_report"] = m.final_report ? report_json(*m.final_report) : json(nullptr);
  os << j.dump(2) << '\n';
}

RunManifest read_manifest_json(std::istream& is) {
  json j;
  try {
    j = json::parse(is);
    RunManifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    m.code_version = j.at("code_version").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.status = j.at("status").get<std::string>();
    m.diagnostic = j.at("diagnostic").get<std::string>();
    m.artifacts = j.at("artifacts").get<std::vector<std::string>>();
    const json& r = j.at("final_report");
    if (!r.is_null()) {
      metrics::EvalReport e;
      e.config_hash = r.at("config_hash").get<std::string>();
      e.runs = r.at("runs").get<int>();
      e.completed = r.at("completed").get<int>();
      e.success_rate = r.at("success_rate").get<double>();
      e.lap_time_mean = opt_from(r.at("lap_time_mean_s"));
      e.lap_time_std = opt_from(r.at("lap_time_std_s"));
      e.avg_speed = opt_from(r.at("avg_speed_mps"));
      e.steer_sm = opt_from(r.at("steering_sm"));
      e.speed_sm = opt_from(r.at("speed_sm"));
      e.steer_sm_all = r.at("steering_sm_all_runs").get<double>();
      e.speed_sm_all = r.at("speed_sm_all_runs").get<double>();
      e.mean_return = r.at("mean_return").get<double>();
      e.mean_abs_dsteer = r.at("mean_abs_dsteer").get<double>();
      m.final_report = e;
    }
    return m;
  } catch (const json::exception& e) {
    throw FileError(std::string("malformed manifest: ") + e.what());
  }
}

RunManifest cmd_train(const ExperimentConfig& cfg, const fs::path& out_dir,
                      const std::function<void(const sac::LogRow&)>& on_log) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw FileError("cannot create " + out_dir.string() + ": " + ec.message());

  RunManifest m = new_manifest(cfg);
  m.artifacts.push_back(write_file(out_dir / "config.json", [&](std::ostream& os) { os << to_text(cfg); }).string());

  const sac::TrainSetup setup = build_train_setup(cfg);
  sac::TrainResult result;
  try {
    result = sac::train(setup, on_log);
  } catch (const sac::TrainingAborted& e) {
    save_training_outputs(e.partial(), out_dir, m);
    m.status = "aborted";
    m.diagnostic = e.what();
    finish_manifest(m, out_dir);
    throw;
  }
  save_training_outputs(result, out_dir, m);

  if (cfg.total_steps > 0 && cfg.n_eval_runs > 0) {
    const auto ev = metrics::evaluate_policy(result.checkpoint, build_eval_setup(cfg), cfg.n_eval_runs, cfg.seed);
    m.artifacts.push_back(
        write_file(out_dir / "final_eval.txt", [&](std::ostream& os) { metrics::write_report_text(os, ev.report); })
            .string());
    m.artifacts.push_back(
        write_file(out_dir / "final_eval.json", [&](std::ostream& os) { metrics::write_report_json(os, ev.report); })
            .string());
    m.final_report = ev.report;
  }
  m.status = "completed";
  finish_manifest(m, out_dir);
  return m;
}

EvalOutput cmd_eval(const fs::path& checkpoint, const ExperimentConfig& cfg, const fs::path& out_dir,
                    const EvalOptions& opts) {
  cfg.validate();
  const nn::Checkpoint ckpt = nn::load_checkpoint(checkpoint);
  const std::string hash = config_hash(cfg);
  if (ckpt.config_hash != hash && !opts.allow_hash_mismatch)
    throw CompatibilityError("checkpoint config hash " + ckpt.config_hash + " does not match config hash " + hash +
                             " (pass the override flag to evaluate anyway)");
  const int runs = opts.runs.value_or(cfg.n_eval_runs);
  if (runs < 1) throw ConfigError("n_eval_runs", "evaluation needs at least one run");
  const std::uint64_t seed = opts.seed.value_or(cfg.seed);

  EvalOutput out;
  const metrics::EvalSetup setup = build_eval_setup(cfg);
  out.result = opts.shifted ? metrics::domain_shift_evaluate(ckpt, setup, runs, seed, cfg.shift)
                            : metrics::evaluate_policy(ckpt, setup, runs, seed);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw FileError("cannot create " + out_dir.string() + ": " + ec.message());
  const std::string suffix = opts.shifted ? "_shifted" : "";
  out.files.push_back(write_file(out_dir / ("eval_report" + suffix + ".txt"),
                                 [&](std::ostream& os) { metrics::write_report_text(os, out.result.report); }));
  out.files.push_back(write_file(out_dir / ("eval_report" + suffix + ".json"),
                                 [&](std::ostream& os) { metrics::write_report_json(os, out.result.report); }));
  out.files.push_back(write_file(out_dir / ("action_log" + suffix + ".csv"),
                                 [&](std::ostream& os) { metrics::write_action_log_csv(os, out.result.log); }));
  return out;
}

std::string to_string(AblationSuite s) {
  return s == AblationSuite::iras_components ? "iras_components" : "spatial_transforms";
}

AblationSuite parse_ablation_suite(const std::string& s) {
  if (s == "iras_components") return AblationSuite::iras_components;
  if (s == "spatial_transforms") return AblationSuite::spatial_transforms;
  throw ParameterError("unknown ablation suite '" + s + "'");
}

std::vector<AblationVariant> ablation_variants(AblationSuite suite, const ExperimentConfig& base) {
  auto make = [&](std::string label, std::string slug, reg::RegMode mode, double photometric_prob) {
    AblationVariant v{std::move(label), std::move(slug), base};
    v.config.reg.mode = mode;
    v.config.reg.lambda_T = 1.0;
    v.config.reg.lambda_S = 1.0;
    v.config.reg.spatial_source = reg::SpatialSource::transform;
    v.config.reg.ir_control = false;
    v.config.reg.photometric_prob = photometric_prob;
    return v;
  };
  const double p = base.reg.photometric_prob;
  if (suite == AblationSuite::iras_components)
    return {make("Vanilla SAC", "vanilla", reg::RegMode::none, p),
            make("Temporal", "temporal", reg::RegMode::temporal_only, p),
            make("Spatial", "spatial", reg::RegMode::spatial_only, p),
            make("I-RAS", "iras", reg::RegMode::both, p)};
  return {make("Vanilla SAC", "vanilla", reg::RegMode::none, p),
          make("Photometric", "photometric", reg::RegMode::spatial_only, 1.0),
          make("Geometric", "geometric", reg::RegMode::spatial_only, 0.0),
          make("Both (Spatial)", "both", reg::RegMode::spatial_only, p)};
}

AblationTable run_ablation(AblationSuite suite, const ExperimentConfig& base, const std::vector<std::uint64_t>& seeds,
                           const VariantRunner& runner) {
  if (seeds.empty()) throw ParameterError("ablation needs at least one seed");
  AblationTable table;
  table.suite = suite;
  for (const auto& v : ablation_variants(suite, base)) {
    v.config.validate();
    AblationRow row{v.label, {}};
    for (std::uint64_t seed : seeds) {
      ExperimentConfig cfg = v.config;
      cfg.seed = seed;
      row.per_seed.push_back({seed, runner(cfg, v.slug)});
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_ablation_table(std::ostream& os, const AblationTable& table) {
  os << "| Agents | Success rate (%) | Finish lap time (s) | Steering S_m |\n";
  os << "|---|---|---|---|\n";
  for (const auto& row : table.rows) {
    std::vector<double> success, lap_mean, lap_std, sm;
    for (const auto& c : row.per_seed) {
      success.push_back(100.0 * c.report.success_rate);
      if (c.report.lap_time_mean) {
        lap_mean.push_back(*c.report.lap_time_mean);
        lap_std.push_back(c.report.lap_time_std.value_or(0.0));
      }
      sm.push_back(c.report.steer_sm.value_or(c.report.steer_sm_all));
    }
    const std::string lap =
        lap_mean.empty() ? "absent" : format("%.2f", mean(lap_mean)) + " ± " + format("%.2f", mean(lap_std));
    os << "| " << row.label << " | " << format("%.1f", mean(success)) << " | " << lap << " | "
       << format("%.4g", mean(sm)) << " |\n";
  }
}

void write_ablation_per_seed_csv(std::ostream& os, const AblationTable& table) {
  os << "agent,seed,runs,completed,success_rate_pct,lap_time_mean_s,lap_time_std_s,steering_sm,steering_sm_all_runs,"
        "mean_abs_dsteer,config_hash\n";
  os << std::setprecision(10);
  for (const auto& row : table.rows)
    for (const auto& c : row.per_seed) {
      const auto& r = c.report;
      os << row.label << ',' << c.seed << ',' << r.runs << ',' << r.completed << ',' << 100.0 * r.success_rate << ','
         << csv_opt(r.lap_time_mean) << ',' << csv_opt(r.lap_time_std) << ',' << csv_opt(r.steer_sm) << ','
         << r.steer_sm_all << ',' << r.mean_abs_dsteer << ',' << r.config_hash << '\n';
    }
}

AblationTable cmd_ablate(AblationSuite suite, const ExperimentConfig& base, const std::vector<std::uint64_t>& seeds,
                         const fs::path& out_dir) {
  if (base.n_eval_runs < 1) throw ConfigError("n_eval_runs", "ablation needs at least one evaluation run");
  VariantRunner runner = [&](const ExperimentConfig& cfg_in, const std::string& slug) {
    ExperimentConfig cfg = cfg_in;
    const fs::path dir = out_dir / slug / ("seed_" + std::to_string(cfg.seed));
    cfg.output_dir = dir.string();
    RunManifest m = cmd_train(cfg, dir);
    if (m.final_report) return *m.final_report;
    const nn::Checkpoint ckpt = nn::load_checkpoint(dir / "checkpoint");
    return metrics::evaluate_policy(ckpt, build_eval_setup(cfg), cfg.n_eval_runs, cfg.seed).report;
  };
  AblationTable table = run_ablation(suite, base, seeds, runner);
  const std::string name = "ablation_" + to_string(suite);
  write_file(out_dir / (name + ".md"), [&](std::ostream& os) { write_ablation_table(os, table); });
  write_file(out_dir / (name + "_per_seed.csv"), [&](std::ostream& os) { write_ablation_per_seed_csv(os, table); });
  return table;
}

FigureExport cmd_export_figures(const metrics::ActionLog& log, const fs::path& out_dir) {
  log.validate();
  FigureExport ex;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw FileError("cannot create " + out_dir.string() + ": " + ec.message());
  for (const auto& ep : log.episodes()) {
    if (ep.empty() || ep.back().terminated != metrics::StepStatus::lap_complete) continue;
    const std::string tag = "episode_" + std::to_string(ep.front().episode);
    std::vector<double> progress, steer, dprogress, dsteer;
    for (std::size_t i = 0; i < ep.size(); ++i) {
      progress.push_back(ep[i].progress);
      steer.push_back(ep[i].steer);
      if (i > 0) {
        dprogress.push_back(ep[i].progress);
        dsteer.push_back(ep[i].steer - ep[i - 1].steer);
      }
    }
    const auto add = [&](const std::string& name, auto body) {
      ex.files.push_back(write_file(out_dir / (tag + "_" + name), body));
    };
    add("steering.csv", [&](std::ostream& os) { write_series_csv(os, "progress", "steer", progress, steer); });
    add("steering.svg", [&](std::ostream& os) {
      write_svg_plot(os, tag + " steering", "lap progress", "steering (normalized)", progress, steer);
    });
    add("steering_change.csv",
        [&](std::ostream& os) { write_series_csv(os, "progress", "steer_change", dprogress, dsteer); });
    add("steering_change.svg", [&](std::ostream& os) {
      write_svg_plot(os, tag + " steering change", "lap progress", "steering change per step", dprogress, dsteer);
    });
    const metrics::Spectrum spec = metrics::amplitude_spectrum(steer, log.sample_rate);
    add("spectrum.csv", [&](std::ostream& os) { metrics::write_spectrum_csv(os, spec); });
    add("spectrum.svg", [&](std::ostream& os) {
      write_svg_plot(os, tag + " steering spectrum", "frequency (Hz)", "amplitude", spec.freq_hz, spec.amplitude);
    });
    ex.steer_sm.push_back(metrics::smoothness(spec));
    ++ex.completed_episodes;
    ex.series += 3;
  }
  return ex;
}

int apply_thread_cap() {
  const char* v = std::getenv("SMOOTHRACE_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1 || n > 4096) throw ConfigError("SMOOTHRACE_THREADS", "expected a positive integer");
  omp_set_num_threads(int(n));
  nn::kernels::set_max_threads(int(n));
  return int(n);
}

}  // namespace smoothrace::experiment
