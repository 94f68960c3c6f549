// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance [--criterion N] [--cache DIR]
//
// Criteria 8, 10 and 11 train full agents. Each trained run lives under
// DIR/<config hash> and is reused when its manifest says it completed.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <ctime>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gradcheck.hpp"
#include "smoothrace/experiment/commands.hpp"
#include "smoothrace/experiment/config.hpp"
#include "smoothrace/metrics/evaluate.hpp"
#include "smoothrace/metrics/spectrum.hpp"
#include "smoothrace/reg/regularizers.hpp"
#include "smoothrace/sac/trainer.hpp"
#include "smoothrace/sim/car.hpp"
#include "smoothrace/sim/env.hpp"
#include "smoothrace/xform/transforms.hpp"

using namespace smoothrace;
namespace fs = std::filesystem;
namespace sx = smoothrace::experiment;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void info(const std::string& what) { notes.push_back("     " + what); }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

fs::path g_cache = "acceptance_cache";

// ---------------------------------------------------------------- 1

Outcome ir_weight_table() {
  Outcome o;
  const double rows[4][3] = {{1.0, 1.0, 1.0}, {1.0, 0.1, 0.316}, {0.1, 1.0, 0.316}, {0.1, 0.1, 0.1}};
  for (const auto& r : rows) {
    const double w = reg::ir_weight(r[0], r[1]);
    o.check(std::abs(w - r[2]) <= 1e-3, fmt("speed %.1f reward %.1f -> %.6f", r[0], r[1], w) +
                                            fmt(" (expected %.3f)", r[2]));
  }
  return o;
}

// ---------------------------------------------------------------- 2

Outcome objective_arithmetic() {
  Outcome o;
  const std::vector<double> L_T{0.3, 0.05, 1.2, 0.0, 0.41};
  const std::vector<double> L_S{0.7, 0.2, 0.0, 0.9, 0.13};
  const double grid[5] = {0.0, 0.1, 0.5, 1.0, 5.0};
  double mT = 0.0, mS = 0.0;
  for (std::size_t i = 0; i < L_T.size(); ++i) {
    mT += L_T[i] / double(L_T.size());
    mS += L_S[i] / double(L_S.size());
  }
  double worst = 0.0;
  int cases = 0;
  for (double lt : grid)
    for (double ls : grid)
      for (double lir : {0.0, 0.1, 0.316, 0.7, 1.0}) {
        reg::RegConfig cfg;
        cfg.mode = reg::RegMode::both;
        cfg.lambda_T = lt;
        cfg.lambda_S = ls;
        cfg.ir_control = false;
        const std::vector<double> w(L_T.size(), lir);
        const double plain = reg::combine_losses(L_T, L_S, w, cfg).penalty_total;
        worst = std::max(worst, std::abs(plain - (lt * mT + ls * mS)));
        cfg.ir_control = true;
        const double weighted = reg::combine_losses(L_T, L_S, w, cfg).penalty_total;
        worst = std::max(worst, std::abs(weighted - lir * (lt * mT + ls * mS)));
        cases += 2;
      }
  o.check(worst <= 1e-6, fmt("%.0f combinations, max abs error %.3g", cases, worst));
  return o;
}

// ---------------------------------------------------------------- 3

Outcome gradient_suite() {
  Outcome o;
  int probes = 0;
  double worst = 0.0;
  for (std::uint64_t seed : {31u, 32u}) {
    for (bool ir : {false, true}) {
      const auto r = gradcheck::actor_gradients(12, seed, ir);
      probes += int(r.probes.size());
      worst = std::max(worst, r.max_rel);
    }
    const auto p = gradcheck::penalty_gradients(12, seed + 10);
    probes += int(p.probes.size());
    worst = std::max(worst, p.max_rel);
  }
  o.check(probes >= 20 && worst <= 1e-2, fmt("32-bit: %.0f probes, max relative error %.3g", probes, worst));

  const std::string cmd = std::string(SMOOTHRACE_GRAD64) + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  if (pipe != nullptr) {
    char buf[256];
    while (std::fgets(buf, sizeof buf, pipe) != nullptr) out += buf;
    const int status = pclose(pipe);
    int n = 0;
    double rel = 1.0;
    const bool parsed = std::sscanf(out.c_str(), "probes %d max_rel %lf", &n, &rel) == 2;
    o.check(parsed && status == 0 && n >= 20 && rel <= 1e-5,
            fmt("64-bit: %.0f probes, max relative error %.3g", n, rel));
  } else {
    o.check(false, "64-bit gradient check could not be started");
  }
  return o;
}

// ---------------------------------------------------------------- 4

std::vector<double> direct_amplitudes(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> m(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<long double> acc = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const long double ang = -2.0L * std::numbers::pi_v<long double> * (long double)(k * t % n) / (long double)n;
      acc += (long double)x[t] * std::complex<long double>(std::cos(ang), std::sin(ang));
    }
    const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
    m[k] = double(std::abs(acc) / (long double)n * (edge ? 1.0L : 2.0L));
  }
  return m;
}

Outcome spectrum_oracle() {
  Outcome o;
  Rng rng(4);
  double worst = 0.0, parseval = 0.0;
  for (std::size_t n = 2; n <= 64; ++n) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.uniform(-1, 1);
    const auto s = metrics::amplitude_spectrum(x);
    const auto d = direct_amplitudes(x);
    if (s.amplitude.size() != d.size()) {
      worst = 1.0;
      continue;
    }
    double energy = 0.0, direct = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
      worst = std::max(worst, std::abs(s.amplitude[k] - d[k]));
      const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
      const double mag = s.amplitude[k] * double(n) / (edge ? 1.0 : 2.0);
      energy += (edge ? 1.0 : 2.0) * mag * mag / double(n);
    }
    for (double v : x) direct += v * v;
    parseval = std::max(parseval, std::abs(energy / direct - 1.0));
  }
  o.check(worst <= 1e-9, fmt("lengths 2-64 vs direct DFT, max abs error %.3g", worst));
  o.check(parseval <= 1e-6, fmt("Parseval max relative error %.3g", parseval));

  const std::vector<double> flat(60, 0.42);
  const double s0 = metrics::smoothness(flat);
  o.check(std::abs(s0) <= 1e-12, fmt("constant signal S_m = %.3g", s0));

  std::vector<double> x(90);
  for (double& v : x) v = rng.uniform(-1, 1);
  const double base = metrics::smoothness(x);
  double lin = 0.0;
  for (double a : {0.5, 2.0, 7.5}) {
    std::vector<double> y = x;
    for (double& v : y) v *= a;
    lin = std::max(lin, std::abs(metrics::smoothness(y) - a * base) / (a * base));
  }
  o.check(lin <= 1e-12, fmt("linearity in amplitude, max relative error %.3g", lin));

  bool mono = true;
  double prev = 0.0;
  for (int bin = 1; bin < 64; ++bin) {
    std::vector<double> t(128);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::sin(2 * std::numbers::pi * bin * double(i) / 128.0);
    const double sm = metrics::smoothness(t);
    mono = mono && sm > prev;
    prev = sm;
  }
  o.check(mono, "S_m strictly increasing over tone bins 1-63 of 128");
  return o;
}

// ---------------------------------------------------------------- 5

Image random_image(int w, int h, Rng& rng) {
  Image img(w, h);
  for (float& p : img.pixels) p = static_cast<float>(rng.uniform());
  return img;
}

int strongest_edge_column(const Image& img) {
  int best = 1;
  double best_v = -1.0;
  for (int x = 1; x < img.width; ++x) {
    double v = 0.0;
    for (int y = 0; y < img.height; ++y) v += std::abs(double(img.at(x, y)) - double(img.at(x - 1, y)));
    if (v > best_v) {
      best_v = v;
      best = x;
    }
  }
  return best;
}

Outcome transform_suite() {
  using namespace smoothrace::xform;
  Outcome o;
  Rng rng(5);
  const Image img = random_image(32, 24, rng);
  Rng sp(6);
  o.check(brightness(img, 0.0) == img && contrast(img, 1.0) == img && salt_pepper(img, 0.0, sp) == img &&
              gaussian_blur(img, 0.0) == img && rotate(img, 0.0) == img && shift(img, 0.0, 0.0) == img &&
              scale(img, 1.0) == img,
          "identity parameters are bit-exact for all seven transforms");

  bool shape = true, range = true;
  TransformSuite suite;
  for (int t = 0; t < 10000; ++t) {
    const int w = 1 + int(rng.index(12)), h = 1 + int(rng.index(12));
    const Image in = random_image(w, h, rng);
    Image out;
    switch (rng.index(8)) {
      case 0: out = brightness(in, rng.uniform(-1.5, 1.5)); break;
      case 1: out = contrast(in, rng.uniform(0.0, 4.0)); break;
      case 2: out = salt_pepper(in, rng.uniform(), rng); break;
      case 3: out = gaussian_blur(in, rng.uniform(0.0, 3.0)); break;
      case 4: out = rotate(in, rng.uniform(-180.0, 180.0)); break;
      case 5: out = shift(in, rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)); break;
      case 6: out = scale(in, rng.uniform(0.2, 3.0)); break;
      default: out = rand_conv(in, rng);
    }
    shape = shape && out.width == w && out.height == h;
    range = range && std::all_of(out.pixels.begin(), out.pixels.end(), [](float p) { return p >= 0.0f && p <= 1.0f; });
  }
  o.check(shape, "dimensions preserved on 10^4 fuzz cases");
  o.check(range, "[0,1] range kept on 10^4 fuzz cases");

  bool perm = true;
  for (int n : {2, 7, 8, 16}) {
    const Image sq = random_image(n, n, rng);
    const Image r90 = rotate(sq, 90.0);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) perm = perm && r90.at(x, y) == sq.at(n - 1 - y, x);
    perm = perm && rotate(r90, -90.0) == sq && rotate(sq, 360.0) == sq;
  }
  o.check(perm, "90 degree rotation is an exact permutation on square images");

  Image dots(9, 7);
  dots.at(1, 2) = 1.0f;
  dots.at(6, 4) = 0.7f;
  const double sigma = 1.0;
  const Image blurred = gaussian_blur(dots, sigma);
  const int r = 3;
  double norm = 0.0, worst = 0.0;
  for (int i = -r; i <= r; ++i) norm += std::exp(-0.5 * i * i / (sigma * sigma));
  for (int y = 0; y < dots.height; ++y)
    for (int x = 0; x < dots.width; ++x) {
      double acc = 0.0;
      for (int j = -r; j <= r; ++j)
        for (int i = -r; i <= r; ++i)
          acc += std::exp(-0.5 * (i * i + j * j) / (sigma * sigma)) / (norm * norm) *
                 dots.at(reflect_index(x + i, dots.width), reflect_index(y + j, dots.height));
      worst = std::max(worst, std::abs(double(blurred.at(x, y)) - acc));
    }
  o.check(worst <= 1e-6, fmt("blur vs brute-force convolution, max abs error %.3g", worst));

  Rng a(99), b(99);
  const Image first = rand_conv(img, a);
  const bool seeded = first == rand_conv(img, b);
  const bool fresh = !(first == rand_conv(img, a));
  o.check(seeded && fresh, "RandConv reproducible per seed and resamples weights on every call");

  Image edge(24, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 11; x < 24; ++x) edge.at(x, y) = 1.0f;
  bool exact = true, bounded = true;
  Rng er(10);
  for (int t = 0; t < 200; ++t) exact = exact && strongest_edge_column(rand_conv(edge, er, {1})) == 11;
  for (int k : {3, 5, 7})
    for (int t = 0; t < 200; ++t) bounded = bounded && std::abs(strongest_edge_column(rand_conv(edge, er, {k})) - 11) <= k / 2;
  o.check(exact, "RandConv k=1 keeps the edge column exactly");
  o.check(bounded, "RandConv k=3,5,7 keeps the edge within the kernel radius");
  return o;
}

// ---------------------------------------------------------------- 6

Outcome simulator_suite() {
  using namespace smoothrace::sim;
  Outcome o;
  auto roll = [](std::uint64_t seed) {
    Env env(make_track(TrackPreset::s_curve, 0.6), RenderParams{}, kDefaultDt, 600, {}, {0.1, 0.1});
    std::vector<CarState> states;
    std::vector<Observation> obs{env.reset(ResetMode::training, seed)};
    Rng act(seed, 1);
    for (int i = 0; i < 200; ++i) {
      const EnvStep st = env.step(ActionCmd(act.uniform(-1, 1), act.uniform(-1, 1)));
      states.push_back(st.outcome.next_state);
      obs.push_back(st.outcome.observation);
      if (st.done()) break;
    }
    return std::make_pair(states, obs);
  };
  bool same = true;
  for (std::uint64_t s : {1u, 2u, 3u}) same = same && roll(s) == roll(s);
  o.check(same, "bit-identical trajectories under a fixed seed");

  const Track track = make_track(TrackPreset::s_curve, 0.6);
  Rng rng(11);
  int total = 0;
  bool reward_ok = true, progress_ok = true, term_ok = true;
  while (total < 100000) {
    CarState s = reset(track, ResetMode::training, rng.next());
    const double bias = rng.uniform(-0.3, 0.3);
    for (;;) {
      const ActionCmd a(bias + rng.normal(0.0, 0.5), rng.uniform(-1, 1));
      const CarState n = integrate(track, s, a, kDefaultDt);
      const double r = compute_reward(track, s, n, kDefaultDt);
      const Termination term = classify(track, n);
      ++total;
      reward_ok = reward_ok && r >= 0.0 && r <= 1.0;
      if (term == Termination::running && r > 0.0)
        progress_ok = progress_ok && track.wrap_delta(s.progress_s, n.progress_s) >= 0.0;
      if (term == Termination::off_track) term_ok = term_ok && std::abs(n.lateral_offset) > track.half_width();
      if (term == Termination::running) term_ok = term_ok && std::abs(n.lateral_offset) <= track.half_width();
      s = n;
      if (term != Termination::running || n.step_index >= 300) break;
    }
  }
  o.check(reward_ok, fmt("reward in [0,1] over %.0f fuzzed steps", total));
  o.check(progress_ok, "rewarded running steps never move backward");
  o.check(term_ok, "off-track termination exactly when |lateral offset| exceeds the half width");

  double worst = 0.0;
  for (auto preset : {TrackPreset::oval, TrackPreset::s_curve}) {
    const Track t = make_track(preset, 0.6);
    const int samples = 100000;
    std::vector<Vec2> dense(samples);
    for (int i = 0; i < samples; ++i) dense[i] = t.point_at(t.length() * i / samples);
    Rng pr(17);
    for (int trial = 0; trial < 100; ++trial) {
      const double s = pr.uniform(0.0, t.length());
      const double h = t.heading_at(s);
      const Vec2 p = t.point_at(s) + pr.uniform(-1.5, 1.5) * Vec2{-std::sin(h), std::cos(h)};
      double best = 1e300;
      for (const Vec2& q : dense) best = std::min(best, dot(p - q, p - q));
      worst = std::max(worst, std::abs(std::abs(t.project(p).lateral_offset) - std::sqrt(best)));
    }
  }
  o.check(worst <= 1e-3, fmt("projection vs dense sampling, max error %.3g m", worst));
  return o;
}

// ---------------------------------------------------------------- 7

bool same_checkpoint(const nn::Checkpoint& a, const nn::Checkpoint& b) {
  if (a.step != b.step || a.networks.size() != b.networks.size() || a.scalars != b.scalars) return false;
  for (std::size_t i = 0; i < a.networks.size(); ++i) {
    const auto& pa = a.networks[i].params.entries;
    const auto& pb = b.networks[i].params.entries;
    if (a.networks[i].name != b.networks[i].name || pa.size() != pb.size()) return false;
    for (std::size_t k = 0; k < pa.size(); ++k)
      if (pa[k].name != pb[k].name || pa[k].value.values != pb[k].value.values) return false;
  }
  return true;
}

Outcome zero_weight_equivalence() {
  Outcome o;
  sx::ExperimentConfig c;
  c.total_steps = 500;
  c.eval_every = 0;
  c.sac.workers = 1;
  c.sac.warmup_steps = 200;
  c.reg.mode = reg::RegMode::none;
  const auto none = sac::train(sx::build_train_setup(c));
  c.reg.mode = reg::RegMode::both;
  c.reg.lambda_T = 0.0;
  c.reg.lambda_S = 0.0;
  const auto both = sac::train(sx::build_train_setup(c));
  o.info(fmt("%.0f updates, %.0f steps", double(none.updates), double(none.checkpoint.step)));
  o.check(none.updates > 0, "training performed gradient updates");
  o.check(same_checkpoint(none.checkpoint, both.checkpoint),
          "mode=both with zero weights gives a bit-identical checkpoint to mode=none");
  return o;
}

// ---------------------------------------------------------------- shared runs

struct Trained {
  metrics::EvalReport report;
  nn::Checkpoint checkpoint;
  double train_seconds = 0.0;
};

double seconds_between(const std::string& a, const std::string& b) {
  auto parse = [](const std::string& s) {
    std::tm tm{};
    std::istringstream in(s);
    in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return timegm(&tm);
  };
  return std::difftime(parse(b), parse(a));
}

Trained train_cached(const sx::ExperimentConfig& cfg_in, const std::string& label) {
  sx::ExperimentConfig cfg = cfg_in;
  const fs::path dir = g_cache / sx::config_hash(cfg);
  cfg.output_dir = dir.string();
  fs::create_directories(dir);
  const int lock = ::open((dir / ".lock").c_str(), O_CREAT | O_RDWR, 0644);
  if (lock >= 0) ::flock(lock, LOCK_EX);

  sx::RunManifest m;
  bool have = false;
  if (std::ifstream in(dir / "manifest.json"); in) {
    try {
      m = sx::read_manifest_json(in);
      have = m.status == "completed" && m.final_report.has_value();
    } catch (const Error&) {
      have = false;
    }
  }
  if (!have) {
    std::cout << "  training " << label << " (" << cfg.total_steps << " steps) into " << dir.string() << std::endl;
    m = sx::cmd_train(cfg, dir);
  } else {
    std::cout << "  reusing " << label << " from " << dir.string() << std::endl;
  }
  if (lock >= 0) {
    ::flock(lock, LOCK_UN);
    ::close(lock);
  }
  Trained t;
  t.checkpoint = nn::load_checkpoint(dir / "checkpoint");
  t.report = *m.final_report;
  t.train_seconds = seconds_between(m.started_at, m.finished_at);
  return t;
}

double steer_sm(const metrics::EvalReport& r) { return r.steer_sm.value_or(r.steer_sm_all); }

const std::vector<std::uint64_t> kSeeds{1, 2, 3};

// ---------------------------------------------------------------- 8

Outcome directional_smoothness() {
  Outcome o;
  sx::ExperimentConfig base;
  base.track = sim::TrackPreset::s_curve;
  base.total_steps = 20000;
  struct Agent {
    std::string name;
    reg::Hook hook;
    std::vector<metrics::EvalReport> reports;
  };
  std::vector<Agent> agents{{"vanilla", reg::Hook::none, {}}, {"I-RAS", reg::Hook::iras, {}},
                            {"I-RAS+IR", reg::Hook::iras_ir, {}}};
  double wall = 0.0;
  for (auto& a : agents)
    for (auto seed : kSeeds) {
      sx::ExperimentConfig c = base;
      c.seed = seed;
      c.reg = reg::RegConfig::preset(a.hook);
      const Trained t = train_cached(c, "s_curve " + a.name + " seed " + std::to_string(seed));
      wall += t.train_seconds;
      a.reports.push_back(t.report);
      o.info(a.name + " seed " + std::to_string(seed) +
             fmt(": success %.0f%%, steering S_m %.5f, mean |dsteer| %.4f", 100.0 * t.report.success_rate,
                 steer_sm(t.report), t.report.mean_abs_dsteer));
    }
  o.info(fmt("training wall time %.1f min", wall / 60.0));

  int smoother = 0;
  for (std::size_t i = 0; i < kSeeds.size(); ++i)
    if (steer_sm(agents[1].reports[i]) < steer_sm(agents[0].reports[i])) ++smoother;
  o.check(smoother >= 2, fmt("(a) I-RAS steering S_m below vanilla in %.0f of 3 seeds", smoother));

  auto mean = [](const std::vector<metrics::EvalReport>& rs, auto f) {
    double s = 0.0;
    for (const auto& r : rs) s += f(r);
    return s / double(rs.size());
  };
  const double succ_i = 100.0 * mean(agents[1].reports, [](const auto& r) { return r.success_rate; });
  const double succ_ir = 100.0 * mean(agents[2].reports, [](const auto& r) { return r.success_rate; });
  o.check(succ_ir >= succ_i - 10.0, fmt("(b) I-RAS+IR success %.1f%% vs I-RAS %.1f%% (allowed drop 10 points)",
                                        succ_ir, succ_i));
  const double d_v = mean(agents[0].reports, [](const auto& r) { return r.mean_abs_dsteer; });
  const double d_i = mean(agents[1].reports, [](const auto& r) { return r.mean_abs_dsteer; });
  o.check(d_i < d_v, fmt("(c) mean |dsteer| I-RAS %.4f < vanilla %.4f", d_i, d_v));
  return o;
}

// ---------------------------------------------------------------- 9

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

metrics::EvalReport fake_report(const sx::ExperimentConfig& cfg, const std::string& slug) {
  metrics::EvalReport r;
  const int code = int(slug.size()) + int(cfg.seed);
  r.runs = 10;
  r.completed = code % 2 == 0 ? 10 - code % 4 : 0;
  r.success_rate = r.completed / 10.0;
  if (r.completed > 0) {
    r.lap_time_mean = 8.0 + 0.25 * code;
    r.lap_time_std = 0.1 * (code % 3);
    r.steer_sm = 0.001 * code;
  }
  r.steer_sm_all = 0.002 * code;
  r.mean_abs_dsteer = 0.01 * code;
  r.config_hash = sx::config_hash(cfg);
  return r;
}

Outcome ablation_shape() {
  Outcome o;
  const std::string header = "| Agents | Success rate (%) | Finish lap time (s) | Steering S_m |";
  const std::map<sx::AblationSuite, std::vector<std::string>> labels{
      {sx::AblationSuite::iras_components, {"Vanilla SAC", "Temporal", "Spatial", "I-RAS"}},
      {sx::AblationSuite::spatial_transforms, {"Vanilla SAC", "Photometric", "Geometric", "Both (Spatial)"}}};
  for (const auto& [suite, names] : labels) {
    const std::string name = "ablation_" + sx::to_string(suite);
    const auto table = sx::run_ablation(suite, sx::ExperimentConfig{}, kSeeds, fake_report);
    std::stringstream md, csv;
    sx::write_ablation_table(md, table);
    sx::write_ablation_per_seed_csv(csv, table);
    std::vector<std::string> lines;
    for (std::string line; std::getline(md, line);) lines.push_back(line);
    bool rows_ok = lines.size() == 6 && lines[0] == header;
    for (std::size_t i = 0; rows_ok && i < names.size(); ++i)
      rows_ok = lines[2 + i].rfind("| " + names[i] + " |", 0) == 0 && std::count(lines[2 + i].begin(), lines[2 + i].end(), '|') == 5;
    o.check(rows_ok, name + ": 4 rows with the agent labels and the four columns");
    int per_seed = -1;
    for (std::string line; std::getline(csv, line);) ++per_seed;
    o.check(per_seed == 12, fmt("per-seed rows retained: %.0f (4 agents x 3 seeds)", per_seed));
    const fs::path golden = fs::path(SMOOTHRACE_GOLDEN_DIR);
    o.check(slurp(golden / (name + ".md")) == md.str() && slurp(golden / (name + "_per_seed.csv")) == csv.str(),
            name + ": matches the golden files");
  }

  // The command itself, with training reduced to zero steps.
  sx::ExperimentConfig tiny;
  tiny.total_steps = 0;
  tiny.n_eval_runs = 1;
  tiny.max_steps = 20;
  const fs::path dir = g_cache / "ablation_format";
  fs::remove_all(dir);
  const auto table = sx::cmd_ablate(sx::AblationSuite::spatial_transforms, tiny, {1}, dir);
  o.check(table.rows.size() == 4 && fs::exists(dir / "ablation_spatial_transforms.md") &&
              fs::exists(dir / "ablation_spatial_transforms_per_seed.csv") &&
              slurp(dir / "ablation_spatial_transforms.md").rfind(header, 0) == 0,
          "cmd_ablate writes the table and per-seed CSV");
  return o;
}

// ---------------------------------------------------------------- 10

Outcome learning_sanity() {
  Outcome o;
  sx::ExperimentConfig base;
  base.total_steps = 20000;
  const metrics::EvalSetup setup = sx::build_eval_setup(base);
  const metrics::EnvMaker make = [&] {
    return sim::Env(setup.track, setup.render, setup.dt, setup.max_steps, {}, setup.noise);
  };
  const double baseline = metrics::run_evaluation(make, metrics::random_controller(1234), 30, 1234).report.mean_return;
  o.info(fmt("random-policy baseline return %.3f over 30 runs", baseline));
  int good = 0;
  for (auto seed : kSeeds) {
    sx::ExperimentConfig c = base;
    c.seed = seed;
    const Trained t = train_cached(c, "oval vanilla seed " + std::to_string(seed));
    const double ratio = t.report.mean_return / baseline;
    if (ratio >= 3.0) ++good;
    o.info("seed " + std::to_string(seed) +
           fmt(": return %.3f (%.1fx baseline), success %.0f%%", t.report.mean_return, ratio,
               100.0 * t.report.success_rate));
  }
  o.check(good >= 2, fmt("return >= 3x random baseline in %.0f of 3 seeds", good));
  return o;
}

// ---------------------------------------------------------------- 11

Outcome domain_shift() {
  Outcome o;
  sx::ExperimentConfig base;
  base.total_steps = 20000;
  const sim::ObservationShift shift{0.2, 0.05, false};
  const metrics::EvalSetup setup = sx::build_eval_setup(base);
  const int runs = 30;
  int better = 0;
  for (auto seed : kSeeds) {
    double drop[2];
    for (int rc = 0; rc < 2; ++rc) {
      sx::ExperimentConfig c = base;
      c.seed = seed;
      c.randconv = rc == 1;
      const std::string name = rc ? "RandConv" : "plain";
      const Trained t = train_cached(c, "oval " + name + " seed " + std::to_string(seed));
      const std::uint64_t eval_seed = 500 + seed;
      const double clean = metrics::evaluate_policy(t.checkpoint, setup, runs, eval_seed).report.success_rate;
      const double shifted =
          metrics::domain_shift_evaluate(t.checkpoint, setup, runs, eval_seed, shift).report.success_rate;
      drop[rc] = 100.0 * (clean - shifted);
      o.info(name + " seed " + std::to_string(seed) +
             fmt(": success %.1f%% clean, %.1f%% shifted, drop %.1f points", 100.0 * clean, 100.0 * shifted,
                 drop[rc]));
    }
    if (drop[1] < drop[0]) ++better;
  }
  o.check(better >= 2, fmt("RandConv degrades by fewer points than plain in %.0f of 3 seeds", better));
  return o;
}

struct Criterion {
  int id;
  std::string name;
  double budget_s;  // 0: not enforced
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  int only = 0;
  std::string cache = "acceptance_cache";
  app.add_option("--criterion", only, "Run a single criterion (1-11)");
  app.add_option("--cache", cache, "Directory for trained runs");
  CLI11_PARSE(app, argc, argv);
  g_cache = cache;
  fs::create_directories(g_cache);
  sx::apply_thread_cap();

  const std::vector<Criterion> all{
      {1, "IR-weight oracle", 1.0, ir_weight_table},
      {2, "objective arithmetic", 1.0, objective_arithmetic},
      {3, "gradient suite", 60.0, gradient_suite},
      {4, "spectrum oracle", 10.0, spectrum_oracle},
      {5, "transform suite", 60.0, transform_suite},
      {6, "simulator suite", 120.0, simulator_suite},
      {7, "zero-weight equivalence", 300.0, zero_weight_equivalence},
      {8, "directional smoothness", 0.0, directional_smoothness},
      {9, "ablation harness shape", 0.0, ablation_shape},
      {10, "learning sanity", 0.0, learning_sanity},
      {11, "domain-shift stand-in", 0.0, domain_shift},
  };
  int failed = 0;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0) o.check(secs < c.budget_s, fmt("runtime %.2f s (budget %.0f s)", secs, c.budget_s));
    for (const auto& n : o.notes) std::cout << "  " << n << "\n";
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.name << fmt(" (%.1f s)", secs)
              << std::endl;
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
