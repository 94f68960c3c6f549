#pragma once

#include <span>
#include <string>
#include <vector>

#include "smoothrace/image.hpp"
#include "smoothrace/nn/network.hpp"
#include "smoothrace/rng.hpp"
#include "smoothrace/xform/transforms.hpp"

namespace smoothrace::reg {

enum class RegMode { none, temporal_only, spatial_only, both };
enum class SpatialSource { gaussian, transform };
/// Which speed feeds the IR weight: the commanded action or the measured car speed.
enum class IrSpeedSource { commanded, measured };
/// Named presets for the actor-objective hook.
enum class Hook { none, caps, iras, iras_ir };

std::string to_string(RegMode m);
std::string to_string(SpatialSource s);
std::string to_string(IrSpeedSource s);
std::string to_string(Hook h);
RegMode parse_reg_mode(const std::string& s);
SpatialSource parse_spatial_source(const std::string& s);
IrSpeedSource parse_ir_speed_source(const std::string& s);
Hook parse_hook(const std::string& s);

struct RegConfig {
  double lambda_T = 1.0;
  double lambda_S = 5.0;
  RegMode mode = RegMode::none;
  SpatialSource spatial_source = SpatialSource::transform;
  double sigma = 0.05;             // gaussian source: per-pixel std
  double photometric_prob = 0.5;   // transform source: P(photometric branch)
  bool ir_control = false;
  IrSpeedSource ir_speed = IrSpeedSource::commanded;
  xform::TransformSuite suite;

  bool uses_temporal() const { return mode == RegMode::temporal_only || mode == RegMode::both; }
  bool uses_spatial() const { return mode == RegMode::spatial_only || mode == RegMode::both; }
  /// Throws ConfigError on inconsistent settings.
  void validate() const;

  static RegConfig preset(Hook hook);
  friend bool operator==(const RegConfig&, const RegConfig&) = default;
};

struct SmoothLossReport {
  double L_T = 0.0;             // batch mean of per-sample temporal distances
  double L_S = 0.0;             // batch mean of per-sample spatial distances
  double lambda_IR_mean = 0.0;  // batch mean IR weight (1 when IR control is off)
  double penalty_total = 0.0;   // non-negative term added to the minimized actor loss
};

/// Adaptive weight sqrt(speed * reward). Both inputs must lie in [0,1].
double ir_weight(double speed_norm01, double reward_norm01);

/// Euclidean distance between rows of two [N, A] tensors.
std::vector<double> row_distances(const nn::Tensor& a, const nn::Tensor& b);

/// Combines per-sample losses: mean_i w_i (lambda_T L_T,i + lambda_S L_S,i) with
/// w_i = lambda_IR,i under IR control and 1 otherwise. Terms disabled by the
/// mode contribute nothing; empty spans mean "term not computed".
SmoothLossReport combine_losses(std::span<const double> L_T, std::span<const double> L_S,
                                std::span<const double> lambda_ir, const RegConfig& cfg);

Image gaussian_similar_state(const Image& s, double sigma, Rng& rng);
/// Exactly one transform per call: photometric with probability
/// photometric_prob, geometric otherwise.
Image transform_similar_state(const Image& s, const xform::TransformSuite& suite,
                              double photometric_prob, Rng& rng);
Image similar_state(const Image& s, const RegConfig& cfg, Rng& rng);

/// Similar states for a batch tensor [N, 1, H, W].
nn::Tensor similar_states(const nn::Tensor& batch, const RegConfig& cfg, Rng& rng);

/// Deterministic action tanh(mean) for every row of a gaussian-policy network.
nn::Tensor policy_actions(const nn::Network& net, const nn::ParamSet& params, const nn::Tensor& batch);

/// Per-sample temporal distance ||pi(s_t) - pi(s_t+1)||.
std::vector<double> temporal_loss(const nn::Network& net, const nn::ParamSet& params,
                                  const nn::Tensor& s_t, const nn::Tensor& s_next);
/// Per-sample spatial distance ||pi(s_t) - pi(s'_t)||.
std::vector<double> spatial_loss(const nn::Network& net, const nn::ParamSet& params,
                                 const nn::Tensor& s_t, const nn::Tensor& s_similar);

/// Inputs for a differentiable penalty evaluation. Actions are deterministic
/// policy actions tanh(mean), [N, A]; `next` and `similar` may be empty when
/// the mode does not use them.
struct PenaltyInputs {
  const nn::Tensor* action_t = nullptr;
  const nn::Tensor* action_next = nullptr;
  const nn::Tensor* action_similar = nullptr;
  std::span<const double> not_done;   // 1 keeps the temporal term, 0 drops it
  std::span<const double> lambda_ir;  // used only under IR control
};

struct PenaltyGrads {
  nn::Tensor action_t;
  nn::Tensor action_next;
  nn::Tensor action_similar;
};

/// Evaluates the penalty and, when grads is non-null, its gradient with
/// respect to each action tensor.
SmoothLossReport penalty_with_grads(const PenaltyInputs& in, const RegConfig& cfg, PenaltyGrads* grads);

/// Batch used by assemble_penalty.
struct PenaltyBatch {
  nn::Tensor s_t;
  nn::Tensor s_next;
  std::vector<double> not_done;
  std::vector<double> speed_norm01;
  std::vector<double> reward_norm01;
};

/// Full penalty evaluation (no gradients): generates similar states from rng,
/// evaluates the policy and combines.
SmoothLossReport assemble_penalty(const PenaltyBatch& batch, const nn::Network& net,
                                  const nn::ParamSet& params, const RegConfig& cfg, Rng& rng);

}  // namespace smoothrace::reg
