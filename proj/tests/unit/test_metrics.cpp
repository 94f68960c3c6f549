#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <vector>

#include "smoothrace/error.hpp"
#include "smoothrace/metrics/evaluate.hpp"
#include "smoothrace/metrics/spectrum.hpp"
#include "smoothrace/nn/network.hpp"
#include "smoothrace/rng.hpp"

using namespace smoothrace;
using namespace smoothrace::metrics;

namespace {

constexpr double kPi = std::numbers::pi;

// O(n^2) one-sided amplitudes with the same normalization.
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

std::vector<double> tone(std::size_t n, double freq, double amp, double fs = 30.0) {
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = amp * std::sin(2 * kPi * freq * double(t) / fs);
  return x;
}

sim::Track long_straight(double half_width) {
  std::vector<sim::Vec2> pts;
  for (int i = 0; i <= 40; ++i) pts.push_back({double(i), 0.0});
  for (int i = 1; i <= 10; ++i) pts.push_back({40.0, double(i)});
  for (int i = 39; i >= 0; --i) pts.push_back({double(i), 10.0});
  for (int i = 9; i >= 1; --i) pts.push_back({0.0, double(i)});
  return sim::Track(pts, half_width, "rect");
}

EnvMaker straight_env(int max_steps) {
  return [max_steps] { return sim::Env(long_straight(3.0), sim::RenderParams{}, sim::kDefaultDt, max_steps); };
}

Controller sine_steering(double freq) {
  return [freq](const Observation&, const sim::CarState& s) {
    return sim::ActionCmd(0.15 * std::sin(2 * kPi * freq * double(s.step_index) / 30.0), 0.0);
  };
}

nn::Checkpoint small_checkpoint(std::uint64_t seed) {
  nn::NetworkSpec spec = nn::policy_spec(24, 32);
  spec.conv = {{4, 3, 2}, {4, 3, 2}};
  spec.dense = {16};
  Rng rng(seed);
  nn::Checkpoint c;
  c.config_hash = "abc";
  c.networks.push_back({"actor", spec, nn::Network(spec).init(rng)});
  return c;
}

}  // namespace

TEST(Spectrum, MatchesDirectDftOnAllShortLengths) {
  Rng rng(1);
  for (std::size_t n = 2; n <= 64; ++n) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.uniform(-1, 1);
    const Spectrum s = amplitude_spectrum(x, 30.0);
    const auto oracle = direct_amplitudes(x);
    ASSERT_EQ(s.amplitude.size(), oracle.size()) << n;
    ASSERT_EQ(s.freq_hz.size(), oracle.size());
    EXPECT_EQ(s.n, n);
    for (std::size_t k = 0; k < oracle.size(); ++k) {
      EXPECT_NEAR(s.amplitude[k], oracle[k], 1e-9) << "n=" << n << " k=" << k;
      EXPECT_DOUBLE_EQ(s.freq_hz[k], double(k) * 30.0 / double(n));
      EXPECT_GE(s.amplitude[k], 0.0);
      EXPECT_LE(s.freq_hz[k], 15.0);
    }
  }
}

TEST(Spectrum, Parseval) {
  Rng rng(2);
  for (std::size_t n : {2u, 7u, 16u, 33u, 100u, 257u}) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.normal();
    const Spectrum s = amplitude_spectrum(x);
    // Undo the one-sided normalization to recover |X_k|^2 / n summed over all k.
    double energy = 0.0;
    for (std::size_t k = 0; k < s.amplitude.size(); ++k) {
      const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
      const double mag = s.amplitude[k] * double(n) / (edge ? 1.0 : 2.0);
      energy += (edge ? 1.0 : 2.0) * mag * mag / double(n);
    }
    double direct = 0.0;
    for (double v : x) direct += v * v;
    EXPECT_NEAR(energy / direct, 1.0, 1e-6) << n;
  }
}

TEST(Spectrum, ConstantSignalIsDcOnly) {
  const std::vector<double> x(50, 0.37);
  const Spectrum s = amplitude_spectrum(x);
  EXPECT_NEAR(s.amplitude[0], 0.37, 1e-9);
  for (std::size_t k = 1; k < s.amplitude.size(); ++k) EXPECT_NEAR(s.amplitude[k], 0.0, 1e-9);
  EXPECT_NEAR(smoothness(x), 0.0, 1e-9);
}

TEST(Spectrum, PureToneOnBin) {
  // Bin 10 of 256 samples at 30 Hz.
  const double f = 10.0 * 30.0 / 256.0;
  const Spectrum s = amplitude_spectrum(tone(256, f, 0.8));
  for (std::size_t k = 0; k < s.amplitude.size(); ++k) {
    if (k == 10) EXPECT_NEAR(s.amplitude[k], 0.8, 1e-6);
    else EXPECT_LT(s.amplitude[k], 1e-6) << k;
  }
}

TEST(Spectrum, RejectsShortOrNonFiniteSignals) {
  EXPECT_THROW(amplitude_spectrum(std::vector<double>{1.0}), ParameterError);
  EXPECT_THROW(amplitude_spectrum(std::vector<double>{}), ParameterError);
  EXPECT_THROW(amplitude_spectrum(std::vector<double>{1.0, std::nan("")}), NumericError);
  EXPECT_THROW(amplitude_spectrum(std::vector<double>{1.0, 2.0}, 0.0), ParameterError);
}

TEST(Smoothness, MatchesDefinition) {
  Rng rng(3);
  std::vector<double> x(40);
  for (double& v : x) v = rng.uniform(-1, 1);
  const auto m = direct_amplitudes(x);
  double expect = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) expect += m[k] * (double(k) * 30.0 / 40.0);
  expect *= 2.0 / (40.0 * 30.0);
  EXPECT_NEAR(smoothness(x), expect, 1e-12);
}

TEST(Smoothness, LinearInAmplitude) {
  Rng rng(4);
  std::vector<double> x(90);
  for (double& v : x) v = rng.uniform(-1, 1);
  const double base = smoothness(x);
  EXPECT_GT(base, 0.0);
  for (double lambda : {0.0, 0.5, 2.0, 7.5}) {
    std::vector<double> y = x;
    for (double& v : y) v *= lambda;
    EXPECT_NEAR(smoothness(y), lambda * base, 1e-12 * (1 + lambda));
  }
}

TEST(Smoothness, IncreasesWithToneFrequency) {
  double prev = 0.0;
  for (int bin = 1; bin < 64; ++bin) {
    const double sm = smoothness(tone(128, bin * 30.0 / 128.0, 1.0));
    EXPECT_GT(sm, prev) << bin;
    prev = sm;
  }
}

TEST(Smoothness, SpectrumCsvRoundTrip) {
  Rng rng(5);
  std::vector<double> x(37);
  for (double& v : x) v = rng.uniform(-1, 1);
  const Spectrum s = amplitude_spectrum(x, 20.0);
  std::stringstream ss;
  write_spectrum_csv(ss, s);
  const Spectrum back = read_spectrum_csv(ss);
  EXPECT_EQ(back.n, s.n);
  EXPECT_EQ(back.sample_rate, s.sample_rate);
  EXPECT_EQ(back.freq_hz, s.freq_hz);
  EXPECT_EQ(back.amplitude, s.amplitude);
  EXPECT_NEAR(smoothness(back), smoothness(x, 20.0), 1e-12);
}

TEST(ActionLog, CsvRoundTripAndValidation) {
  ActionLog log;
  for (int e = 0; e < 2; ++e)
    for (int t = 0; t < 5; ++t) {
      ActionRecord r;
      r.step = t;
      r.episode = e;
      r.steer = 0.1 * t - 0.3 * e;
      r.speed = 1.0 / 3.0;
      r.reward = 0.123456789;
      r.progress = t / 7.0;
      r.terminated = t == 4 ? (e ? StepStatus::truncated : StepStatus::off_track) : StepStatus::running;
      log.records.push_back(r);
    }
  std::stringstream ss;
  write_action_log_csv(ss, log);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "step,episode,steer,speed,reward,progress,terminated");
  const ActionLog back = read_action_log_csv(ss);
  EXPECT_EQ(back.records, log.records);
  EXPECT_EQ(back.episodes().size(), 2u);

  log.records[2].step = 9;
  EXPECT_THROW(log.validate(), ParameterError);
  std::stringstream bad("step,episode\n1,2\n");
  EXPECT_THROW(read_action_log_csv(bad), FileError);
}

TEST(Evaluation, StraightLineHasZeroSteeringSmoothness) {
  const Controller straight = [](const Observation&, const sim::CarState&) { return sim::ActionCmd(0.0, 0.5); };
  const EvalResult r = run_evaluation(straight_env(60), straight, 2, 7);
  ASSERT_EQ(r.report.per_run.size(), 2u);
  for (const auto& run : r.report.per_run) {
    EXPECT_EQ(run.outcome, StepStatus::truncated);
    EXPECT_EQ(run.steps, 60);
    EXPECT_NEAR(run.steer_sm, 0.0, 1e-12);
    EXPECT_EQ(run.mean_abs_dsteer, 0.0);
  }
  EXPECT_EQ(r.report.completed, 0);
  EXPECT_EQ(r.report.success_rate, 0.0);
  EXPECT_FALSE(r.report.lap_time_mean.has_value());
  EXPECT_FALSE(r.report.steer_sm.has_value());
}

TEST(Evaluation, FasterSteeringOscillationIsRougher) {
  const EvalResult slow = run_evaluation(straight_env(90), sine_steering(1.0), 1, 3);
  const EvalResult fast = run_evaluation(straight_env(90), sine_steering(3.0), 1, 3);
  ASSERT_EQ(slow.report.per_run[0].steps, 90);
  ASSERT_EQ(fast.report.per_run[0].steps, 90);
  EXPECT_GT(fast.report.steer_sm_all, slow.report.steer_sm_all);
  EXPECT_GT(fast.report.mean_abs_dsteer, slow.report.mean_abs_dsteer);
}

TEST(Evaluation, LogMatchesRuns) {
  const EvalResult r = run_evaluation(straight_env(40), sine_steering(2.0), 3, 11);
  EXPECT_NO_THROW(r.log.validate());
  const auto eps = r.log.episodes();
  ASSERT_EQ(eps.size(), 3u);
  for (std::size_t e = 0; e < eps.size(); ++e) {
    EXPECT_EQ(std::int64_t(eps[e].size()), r.report.per_run[e].steps);
    EXPECT_EQ(eps[e].back().terminated, r.report.per_run[e].outcome);
    std::vector<double> steer;
    for (const auto& rec : eps[e]) steer.push_back(rec.steer);
    EXPECT_NEAR(smoothness(steer, 30.0), r.report.per_run[e].steer_sm, 1e-12);
  }
}

TEST(Evaluation, CheckpointRunsAreDeterministic) {
  const nn::Checkpoint ckpt = small_checkpoint(1);
  EvalSetup setup{sim::make_track(sim::TrackPreset::oval, 0.6), {}, sim::kDefaultDt, 120, {0.1, 0.1}};
  const EvalResult a = evaluate_policy(ckpt, setup, 3, 42);
  const EvalResult b = evaluate_policy(ckpt, setup, 3, 42);
  EXPECT_EQ(a.log.records, b.log.records);
  std::stringstream ja, jb;
  write_report_json(ja, a.report);
  write_report_json(jb, b.report);
  EXPECT_EQ(ja.str(), jb.str());
  EXPECT_EQ(a.report.config_hash, "abc");
  EXPECT_EQ(a.report.completed + int(std::count_if(a.report.per_run.begin(), a.report.per_run.end(),
                                                   [](const RunSummary& s) { return !s.completed(); })),
            a.report.runs);
}

TEST(Evaluation, EmptyShiftMatchesPlainEvaluation) {
  const nn::Checkpoint ckpt = small_checkpoint(2);
  EvalSetup setup{sim::make_track(sim::TrackPreset::oval, 0.6), {}, sim::kDefaultDt, 80, {}};
  const EvalResult plain = evaluate_policy(ckpt, setup, 2, 5);
  const EvalResult shifted = domain_shift_evaluate(ckpt, setup, 2, 5, {});
  EXPECT_EQ(plain.log.records, shifted.log.records);

  const EvalResult noisy = domain_shift_evaluate(ckpt, setup, 2, 5, {0.0, 0.05, false});
  EXPECT_GE(noisy.report.success_rate, 0.0);
  EXPECT_LE(noisy.report.success_rate, 1.0);
  EXPECT_EQ(noisy.report.runs, 2);
}

TEST(Evaluation, RandomControllerAccounting) {
  const EnvMaker make = [] {
    return sim::Env(sim::make_track(sim::TrackPreset::oval, 0.6), sim::RenderParams{}, sim::kDefaultDt, 200);
  };
  const EvalResult r = run_evaluation(make, random_controller(9), 8, 1);
  int completed = 0;
  for (const auto& s : r.report.per_run) completed += s.completed();
  EXPECT_EQ(completed, r.report.completed);
  EXPECT_EQ(r.report.runs, 8);
  EXPECT_DOUBLE_EQ(r.report.success_rate, completed / 8.0);
  EXPECT_THROW(run_evaluation(make, random_controller(9), 0, 1), ParameterError);
}

TEST(Evaluation, ReportText) {
  EvalReport r;
  r.runs = 4;
  r.completed = 0;
  std::stringstream ss;
  write_report_text(ss, r);
  EXPECT_NE(ss.str().find("success_rate: 0%"), std::string::npos);
  EXPECT_NE(ss.str().find("lap_time_mean_s: absent"), std::string::npos);
}
