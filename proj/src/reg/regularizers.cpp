#include "smoothrace/reg/regularizers.hpp"

#include <algorithm>
#include <cmath>

#include "smoothrace/error.hpp"
#include "smoothrace/nn/policy.hpp"

namespace smoothrace::reg {

using nn::Tensor;

std::string to_string(RegMode m) {
  switch (m) {
    case RegMode::none: return "none";
    case RegMode::temporal_only: return "temporal_only";
    case RegMode::spatial_only: return "spatial_only";
    case RegMode::both: return "both";
  }
  return "?";
}
std::string to_string(SpatialSource s) { return s == SpatialSource::gaussian ? "gaussian" : "transform"; }
std::string to_string(IrSpeedSource s) { return s == IrSpeedSource::commanded ? "commanded" : "measured"; }
std::string to_string(Hook h) {
  switch (h) {
    case Hook::none: return "none";
    case Hook::caps: return "caps";
    case Hook::iras: return "iras";
    case Hook::iras_ir: return "iras_ir";
  }
  return "?";
}

RegMode parse_reg_mode(const std::string& s) {
  if (s == "none") return RegMode::none;
  if (s == "temporal_only") return RegMode::temporal_only;
  if (s == "spatial_only") return RegMode::spatial_only;
  if (s == "both") return RegMode::both;
  throw ConfigError("reg.mode", "unknown mode '" + s + "'");
}
SpatialSource parse_spatial_source(const std::string& s) {
  if (s == "gaussian") return SpatialSource::gaussian;
  if (s == "transform") return SpatialSource::transform;
  throw ConfigError("reg.spatial_source", "unknown source '" + s + "'");
}
IrSpeedSource parse_ir_speed_source(const std::string& s) {
  if (s == "commanded") return IrSpeedSource::commanded;
  if (s == "measured") return IrSpeedSource::measured;
  throw ConfigError("reg.ir_speed", "unknown speed source '" + s + "'");
}
Hook parse_hook(const std::string& s) {
  if (s == "none") return Hook::none;
  if (s == "caps") return Hook::caps;
  if (s == "iras") return Hook::iras;
  if (s == "iras_ir") return Hook::iras_ir;
  throw ParameterError("unknown regularizer hook '" + s + "'");
}

void RegConfig::validate() const {
  if (!(lambda_T >= 0.0)) throw ConfigError("reg.lambda_T", "must be non-negative");
  if (!(lambda_S >= 0.0)) throw ConfigError("reg.lambda_S", "must be non-negative");
  if (spatial_source == SpatialSource::gaussian && !(sigma > 0.0))
    throw ConfigError("reg.sigma", "must be positive for the gaussian source");
  if (!(photometric_prob >= 0.0 && photometric_prob <= 1.0))
    throw ConfigError("reg.photometric_prob", "must lie in [0,1]");
  if (uses_spatial() && spatial_source == SpatialSource::transform) {
    if (suite.empty()) throw ConfigError("reg.suite", "transform source needs at least one transform");
    if (photometric_prob > 0.0 && suite.photometric.empty())
      throw ConfigError("reg.photometric_prob", "photometric branch enabled but no photometric transforms");
    if (photometric_prob < 1.0 && suite.geometric.empty())
      throw ConfigError("reg.photometric_prob", "geometric branch enabled but no geometric transforms");
  }
  suite.params.validate();
}

RegConfig RegConfig::preset(Hook hook) {
  RegConfig c;
  switch (hook) {
    case Hook::none: c.mode = RegMode::none; break;
    case Hook::caps:
      c.mode = RegMode::both;
      c.spatial_source = SpatialSource::gaussian;
      break;
    case Hook::iras: c.mode = RegMode::both; break;
    case Hook::iras_ir:
      c.mode = RegMode::both;
      c.ir_control = true;
      break;
  }
  return c;
}

double ir_weight(double speed_norm01, double reward_norm01) {
  if (!(speed_norm01 >= 0.0 && speed_norm01 <= 1.0))
    throw ParameterError("normalized speed " + std::to_string(speed_norm01) + " outside [0,1]");
  if (!(reward_norm01 >= 0.0 && reward_norm01 <= 1.0))
    throw ParameterError("normalized reward " + std::to_string(reward_norm01) + " outside [0,1]");
  return std::sqrt(speed_norm01 * reward_norm01);
}

std::vector<double> row_distances(const Tensor& a, const Tensor& b) {
  nn::require_same_shape(a, b, "row_distances");
  if (a.rank() != 2) throw ShapeError("row_distances expects [N, A] tensors");
  const std::size_t n = a.dim(0), k = a.dim(1);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double diff = double(a[i * k + j]) - double(b[i * k + j]);
      acc += diff * diff;
    }
    d[i] = std::sqrt(acc);
  }
  return d;
}

SmoothLossReport combine_losses(std::span<const double> L_T, std::span<const double> L_S,
                                std::span<const double> lambda_ir, const RegConfig& cfg) {
  SmoothLossReport r;
  if (cfg.mode == RegMode::none) {
    r.lambda_IR_mean = 1.0;
    return r;
  }
  const bool temporal = cfg.uses_temporal();
  const bool spatial = cfg.uses_spatial();
  if (temporal && L_T.empty()) throw ConfigError("reg.mode", "temporal term requested without temporal losses");
  if (spatial && L_S.empty()) throw ConfigError("reg.mode", "spatial term requested without spatial losses");
  const std::size_t n = temporal ? L_T.size() : L_S.size();
  if ((temporal && L_T.size() != n) || (spatial && L_S.size() != n))
    throw ShapeError("per-sample loss lengths differ");
  if (cfg.ir_control && lambda_ir.size() != n) throw ShapeError("IR weights must match the batch");
  if (n == 0) return r;

  double sum_t = 0.0, sum_s = 0.0, sum_w = 0.0, total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double term = 0.0;
    if (temporal) {
      term += cfg.lambda_T * L_T[i];
      sum_t += L_T[i];
    }
    if (spatial) {
      term += cfg.lambda_S * L_S[i];
      sum_s += L_S[i];
    }
    const double w = cfg.ir_control ? lambda_ir[i] : 1.0;
    sum_w += w;
    total += w * term;
  }
  const double inv = 1.0 / double(n);
  r.L_T = sum_t * inv;
  r.L_S = sum_s * inv;
  r.lambda_IR_mean = sum_w * inv;
  r.penalty_total = total * inv;
  return r;
}

Image gaussian_similar_state(const Image& s, double sigma, Rng& rng) {
  if (!(sigma > 0.0)) throw ParameterError("gaussian similar-state sigma must be positive");
  Image out = s;
  for (float& p : out.pixels) p = static_cast<float>(std::clamp(double(p) + rng.normal(0.0, sigma), 0.0, 1.0));
  return out;
}

Image transform_similar_state(const Image& s, const xform::TransformSuite& suite,
                              double photometric_prob, Rng& rng) {
  if (suite.empty()) throw ParameterError("transform suite is empty");
  if (rng.bernoulli(photometric_prob)) return xform::random_photometric(s, suite, rng);
  return xform::random_geometric(s, suite, rng);
}

Image similar_state(const Image& s, const RegConfig& cfg, Rng& rng) {
  if (cfg.spatial_source == SpatialSource::gaussian) return gaussian_similar_state(s, cfg.sigma, rng);
  return transform_similar_state(s, cfg.suite, cfg.photometric_prob, rng);
}

Tensor similar_states(const Tensor& batch, const RegConfig& cfg, Rng& rng) {
  if (batch.rank() != 4 || batch.dim(1) != 1) throw ShapeError("similar_states expects [N, 1, H, W]");
  const int h = int(batch.dim(2)), w = int(batch.dim(3));
  Tensor out(batch.shape);
  Image img(w, h);
  for (std::size_t i = 0; i < batch.dim(0); ++i) {
    auto src = batch.row(i);
    for (std::size_t k = 0; k < src.size(); ++k) img.pixels[k] = static_cast<float>(src[k]);
    const Image sim = similar_state(img, cfg, rng);
    auto dst = out.row(i);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = static_cast<Real>(sim.pixels[k]);
  }
  return out;
}

Tensor policy_actions(const nn::Network& net, const nn::ParamSet& params, const Tensor& batch) {
  if (net.spec().head != nn::Head::gaussian_policy) throw ParameterError("policy_actions needs a policy network");
  const Tensor raw = net.forward(params, batch);
  const auto heads = nn::split_policy_output(raw, net.spec().action_dim);
  Tensor act(heads.mean.shape);
  for (std::size_t i = 0; i < heads.mean.dim(0); ++i) nn::deterministic_action(heads.mean.row(i), act.row(i));
  return act;
}

std::vector<double> temporal_loss(const nn::Network& net, const nn::ParamSet& params, const Tensor& s_t,
                                  const Tensor& s_next) {
  nn::require_same_shape(s_t, s_next, "temporal_loss batches");
  return row_distances(policy_actions(net, params, s_t), policy_actions(net, params, s_next));
}

std::vector<double> spatial_loss(const nn::Network& net, const nn::ParamSet& params, const Tensor& s_t,
                                 const Tensor& s_similar) {
  nn::require_same_shape(s_t, s_similar, "spatial_loss batches");
  return row_distances(policy_actions(net, params, s_t), policy_actions(net, params, s_similar));
}

namespace {

// Adds coeff * d||a-b||/da to ga and the opposite to gb, row i.
void distance_grad(const Tensor& a, const Tensor& b, std::size_t i, double dist, double coeff, Tensor& ga,
                   Tensor& gb) {
  if (dist <= 0.0 || coeff == 0.0) return;
  const std::size_t k = a.dim(1);
  for (std::size_t j = 0; j < k; ++j) {
    const double g = coeff * (double(a[i * k + j]) - double(b[i * k + j])) / dist;
    ga[i * k + j] += static_cast<Real>(g);
    gb[i * k + j] -= static_cast<Real>(g);
  }
}

}  // namespace

SmoothLossReport penalty_with_grads(const PenaltyInputs& in, const RegConfig& cfg, PenaltyGrads* grads) {
  if (in.action_t == nullptr) throw ShapeError("penalty needs current-state actions");
  const Tensor& at = *in.action_t;
  const std::size_t n = at.dim(0);
  const bool temporal = cfg.uses_temporal();
  const bool spatial = cfg.uses_spatial();
  std::vector<double> lt, ls;
  if (temporal) {
    if (in.action_next == nullptr) throw ShapeError("temporal term needs next-state actions");
    if (in.not_done.size() != n) throw ShapeError("not_done mask must match the batch");
    lt = row_distances(at, *in.action_next);
    for (std::size_t i = 0; i < n; ++i) lt[i] *= in.not_done[i];
  }
  if (spatial) {
    if (in.action_similar == nullptr) throw ShapeError("spatial term needs similar-state actions");
    ls = row_distances(at, *in.action_similar);
  }
  const SmoothLossReport report = combine_losses(lt, ls, in.lambda_ir, cfg);

  if (grads) {
    grads->action_t = Tensor(at.shape);
    grads->action_next = Tensor(at.shape);
    grads->action_similar = Tensor(at.shape);
    if (cfg.mode != RegMode::none && n > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        const double w = (cfg.ir_control ? in.lambda_ir[i] : 1.0) / double(n);
        if (temporal && in.not_done[i] != 0.0)
          distance_grad(at, *in.action_next, i, lt[i], w * cfg.lambda_T, grads->action_t, grads->action_next);
        if (spatial)
          distance_grad(at, *in.action_similar, i, ls[i], w * cfg.lambda_S, grads->action_t,
                        grads->action_similar);
      }
    }
  }
  return report;
}

SmoothLossReport assemble_penalty(const PenaltyBatch& batch, const nn::Network& net, const nn::ParamSet& params,
                                  const RegConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.mode == RegMode::none) return combine_losses({}, {}, {}, cfg);
  const std::size_t n = batch.s_t.dim(0);
  std::vector<double> lambda_ir;
  if (cfg.ir_control) {
    if (batch.speed_norm01.size() != n || batch.reward_norm01.size() != n)
      throw ShapeError("IR control needs speed and reward per sample");
    lambda_ir.resize(n);
    for (std::size_t i = 0; i < n; ++i) lambda_ir[i] = ir_weight(batch.speed_norm01[i], batch.reward_norm01[i]);
  }
  const Tensor at = policy_actions(net, params, batch.s_t);
  Tensor an, as;
  std::vector<double> not_done = batch.not_done;
  if (cfg.uses_temporal()) {
    nn::require_same_shape(batch.s_t, batch.s_next, "assemble_penalty batches");
    an = policy_actions(net, params, batch.s_next);
    if (not_done.empty()) not_done.assign(n, 1.0);
  }
  if (cfg.uses_spatial()) as = policy_actions(net, params, similar_states(batch.s_t, cfg, rng));
  PenaltyInputs in{&at, cfg.uses_temporal() ? &an : nullptr, cfg.uses_spatial() ? &as : nullptr, not_done,
                   lambda_ir};
  return penalty_with_grads(in, cfg, nullptr);
}

}  // namespace smoothrace::reg
