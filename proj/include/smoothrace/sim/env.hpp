#pragma once

#include <cstdint>

#include "smoothrace/rng.hpp"
#include "smoothrace/sim/car.hpp"
#include "smoothrace/sim/render.hpp"
#include "smoothrace/sim/track.hpp"

namespace smoothrace::sim {

/// Post-render perturbation used for domain-shift evaluation.
struct ObservationShift {
  double brightness = 0.0;
  double noise_sigma = 0.0;
  bool invert = false;

  bool active() const { return brightness != 0.0 || noise_sigma > 0.0 || invert; }
  friend bool operator==(const ObservationShift&, const ObservationShift&) = default;
};

void apply_shift(Observation& obs, const ObservationShift& shift, Rng& rng);

/// Zero-mean Gaussian noise added to the executed command (normalized units).
/// The logged action is the commanded one; only the car sees the noise.
struct ActuationNoise {
  double steer_std = 0.0;
  double speed_std = 0.0;
  bool active() const { return steer_std > 0.0 || speed_std > 0.0; }
  friend bool operator==(const ActuationNoise&, const ActuationNoise&) = default;
};

struct EnvStep {
  StepOutcome outcome;
  bool truncated = false;  // hit the step cap while still running
  bool done() const { return outcome.terminated != Termination::running || truncated; }
};

/// One episode-at-a-time environment instance. Not shareable across threads;
/// independent instances are.
class Env {
 public:
  Env(Track track, RenderParams render, double dt = kDefaultDt, int max_steps = 600,
      ObservationShift shift = {}, ActuationNoise noise = {});

  Observation reset(ResetMode mode, std::uint64_t seed);
  EnvStep step(const ActionCmd& action);

  const Track& track() const { return track_; }
  const CarState& state() const { return state_; }
  const RenderParams& render_params() const { return render_; }
  double dt() const { return dt_; }
  int max_steps() const { return max_steps_; }
  const ActuationNoise& actuation_noise() const { return noise_; }
  const ObservationShift& observation_shift() const { return shift_; }

 private:
  Observation observe(const CarState& s);

  Track track_;
  RenderParams render_;
  double dt_;
  int max_steps_;
  ObservationShift shift_;
  ActuationNoise noise_;
  Rng shift_rng_;
  Rng noise_rng_;
  CarState state_;
};

}  // namespace smoothrace::sim
