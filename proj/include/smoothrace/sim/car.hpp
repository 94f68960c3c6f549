#pragma once

#include <cstdint>
#include <string>

#include "smoothrace/image.hpp"
#include "smoothrace/sim/track.hpp"

namespace smoothrace::sim {

inline constexpr double kMaxSteerDeg = 30.0;
inline constexpr double kMinSpeed = 1.0;
inline constexpr double kMaxSpeed = 4.0;
inline constexpr double kWheelbase = 0.16;
inline constexpr double kSpeedLag = 0.3;
inline constexpr double kDefaultDt = 1.0 / 30.0;
inline constexpr int kWrongWaySteps = 10;

struct CarState {
  Vec2 position;
  double heading = 0.0;
  double speed = 0.0;
  double progress_s = 0.0;    // arc position along the centerline
  double lap_fraction = 0.0;  // progress_s / length in [0,1)
  std::int64_t step_index = 0;
  double lateral_offset = 0.0;
  double lap_progress = 0.0;  // net forward distance since reset (unwrapped)
  int wrong_way_steps = 0;

  friend bool operator==(const CarState&, const CarState&) = default;
};

/// Normalized command; both components are clamped to [-1,1] on construction.
struct ActionCmd {
  double steer_norm = 0.0;
  double speed_norm = 0.0;

  ActionCmd() = default;
  ActionCmd(double steer, double speed);

  double steer_angle_rad() const;
  double target_speed() const { return 2.5 + 1.5 * speed_norm; }
  /// Commanded speed mapped to [0,1].
  double speed_norm01() const { return (speed_norm + 1.0) / 2.0; }
};

enum class Termination { running, off_track, wrong_direction, lap_complete };
std::string to_string(Termination t);

struct StepOutcome {
  CarState next_state;
  Observation observation;
  double reward = 0.0;
  Termination terminated = Termination::running;
};

/// Start placement: evaluation always starts at arc length 0, training
/// samples the start uniformly along the track from the seed.
enum class ResetMode { evaluation, training };

CarState reset(const Track& track, ResetMode mode, std::uint64_t seed);

/// Pure kinematic update (no rendering, no termination).
CarState integrate(const Track& track, const CarState& state, const ActionCmd& action, double dt);

double compute_reward(const Track& track, const CarState& prev, const CarState& next, double dt);

Termination classify(const Track& track, const CarState& state);

struct RenderParams;

StepOutcome step(const Track& track, const CarState& state, const ActionCmd& action, double dt,
                 const RenderParams& render);

}  // namespace smoothrace::sim
