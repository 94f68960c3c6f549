#include "smoothrace/sim/env.hpp"

#include <algorithm>

namespace smoothrace::sim {

void apply_shift(Observation& obs, const ObservationShift& shift, Rng& rng) {
  if (!shift.active()) return;
  for (float& p : obs.pixels) {
    double v = p;
    if (shift.invert) v = 1.0 - v;
    v += shift.brightness;
    if (shift.noise_sigma > 0.0) v += shift.noise_sigma * rng.normal();
    p = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
}

Env::Env(Track track, RenderParams render, double dt, int max_steps, ObservationShift shift,
         ActuationNoise noise)
    : track_(std::move(track)), render_(render), dt_(dt), max_steps_(max_steps), shift_(shift), noise_(noise) {
  render_.validate();
  if (!(dt_ > 0.0)) throw ParameterError("dt must be positive");
  if (max_steps_ <= 0) throw ParameterError("max_steps must be positive");
}

Observation Env::observe(const CarState& s) {
  Observation obs = render_observation(track_, s, render_);
  apply_shift(obs, shift_, shift_rng_);
  return obs;
}

Observation Env::reset(ResetMode mode, std::uint64_t seed) {
  state_ = sim::reset(track_, mode, seed);
  shift_rng_.reseed(seed, 0x5111f7);
  noise_rng_.reseed(seed, 0xac7);
  return observe(state_);
}

EnvStep Env::step(const ActionCmd& action) {
  EnvStep out;
  ActionCmd executed = action;
  if (noise_.active())
    executed = ActionCmd(action.steer_norm + noise_.steer_std * noise_rng_.normal(),
                         action.speed_norm + noise_.speed_std * noise_rng_.normal());
  const CarState next = integrate(track_, state_, executed, dt_);
  out.outcome.reward = compute_reward(track_, state_, next, dt_);
  out.outcome.terminated = classify(track_, next);
  out.outcome.next_state = next;
  out.outcome.observation = observe(next);
  out.truncated = out.outcome.terminated == Termination::running && next.step_index >= max_steps_;
  state_ = next;
  return out;
}

}  // namespace smoothrace::sim
