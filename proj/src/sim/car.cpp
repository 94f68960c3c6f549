#include "smoothrace/sim/car.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "smoothrace/error.hpp"
#include "smoothrace/rng.hpp"
#include "smoothrace/sim/render.hpp"

namespace smoothrace::sim {

namespace {

double clamp_unit(double v) {
  if (std::isnan(v)) return v;  // rejected later by step()
  return std::clamp(v, -1.0, 1.0);
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

void require_finite(const CarState& s) {
  if (!std::isfinite(s.position.x) || !std::isfinite(s.position.y) || !std::isfinite(s.heading) ||
      !std::isfinite(s.speed) || !std::isfinite(s.lap_progress))
    throw NumericError("car state has non-finite components");
}

}  // namespace

ActionCmd::ActionCmd(double steer, double speed)
    : steer_norm(clamp_unit(steer)), speed_norm(clamp_unit(speed)) {}

double ActionCmd::steer_angle_rad() const { return steer_norm * kMaxSteerDeg * std::numbers::pi / 180.0; }

std::string to_string(Termination t) {
  switch (t) {
    case Termination::running: return "running";
    case Termination::off_track: return "off_track";
    case Termination::wrong_direction: return "wrong_direction";
    case Termination::lap_complete: return "lap_complete";
  }
  return "?";
}

CarState reset(const Track& track, ResetMode mode, std::uint64_t seed) {
  double s0 = 0.0;
  if (mode == ResetMode::training) {
    Rng rng(seed, 0x7e5e7);
    s0 = rng.uniform(0.0, track.length());
  }
  CarState st;
  st.position = track.point_at(s0);
  st.heading = track.heading_at(s0);
  st.speed = 1.0;
  const Projection pr = track.project(st.position);
  st.progress_s = pr.progress_s;
  st.lateral_offset = pr.lateral_offset;
  st.lap_fraction = pr.progress_s / track.length();
  return st;
}

CarState integrate(const Track& track, const CarState& state, const ActionCmd& action, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("dt must be positive");
  require_finite(state);
  if (!std::isfinite(action.steer_norm) || !std::isfinite(action.speed_norm))
    throw NumericError("action has non-finite components");

  CarState next = state;
  const double v = state.speed;
  next.position = state.position + (v * dt) * Vec2{std::cos(state.heading), std::sin(state.heading)};
  next.heading = wrap_angle(state.heading + (v / kWheelbase) * std::tan(action.steer_angle_rad()) * dt);
  const double target = action.target_speed();
  next.speed = std::clamp(v + (target - v) * (1.0 - std::exp(-dt / kSpeedLag)), 0.0, kMaxSpeed);

  const Projection pr = track.project(next.position);
  next.lap_progress = state.lap_progress + track.wrap_delta(state.progress_s, pr.progress_s);
  next.progress_s = pr.progress_s;
  next.lap_fraction = pr.progress_s / track.length();
  if (next.lap_fraction >= 1.0) next.lap_fraction = 0.0;
  next.lateral_offset = pr.lateral_offset;
  next.step_index = state.step_index + 1;

  const Vec2 tan = track.tangent(pr.segment);
  const double along = std::cos(next.heading) * tan.x + std::sin(next.heading) * tan.y;
  next.wrong_way_steps = along < 0.0 ? state.wrong_way_steps + 1 : 0;
  return next;
}

double compute_reward(const Track& track, const CarState& prev, const CarState& next, double dt) {
  const double half = track.half_width();
  if (std::abs(next.lateral_offset) > half) return 0.0;
  const double ds = track.wrap_delta(prev.progress_s, next.progress_s);
  const double progress = std::clamp(ds / (kMaxSpeed * dt), 0.0, 1.0);
  const double centering = std::max(0.0, 1.0 - std::abs(next.lateral_offset) / half);
  return progress * centering;
}

Termination classify(const Track& track, const CarState& state) {
  if (std::abs(state.lateral_offset) > track.half_width()) return Termination::off_track;
  if (state.wrong_way_steps >= kWrongWaySteps) return Termination::wrong_direction;
  if (state.lap_progress >= track.length()) return Termination::lap_complete;
  return Termination::running;
}

StepOutcome step(const Track& track, const CarState& state, const ActionCmd& action, double dt,
                 const RenderParams& render) {
  StepOutcome out;
  out.next_state = integrate(track, state, action, dt);
  out.reward = compute_reward(track, state, out.next_state, dt);
  out.terminated = classify(track, out.next_state);
  out.observation = render_observation(track, out.next_state, render);
  return out;
}

}  // namespace smoothrace::sim
