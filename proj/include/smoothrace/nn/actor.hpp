#pragma once

#include <vector>

#include "smoothrace/image.hpp"
#include "smoothrace/nn/network.hpp"
#include "smoothrace/rng.hpp"

namespace smoothrace::nn {

/// Packs single-channel images into an [N, 1, H, W] batch.
Tensor images_to_batch(const std::vector<const Image*>& images);
Tensor image_to_batch(const Image& image);

/// Read-only view of a gaussian-policy network for acting. Safe to share
/// across threads as long as the parameters are not mutated meanwhile.
class ActorPolicy {
 public:
  ActorPolicy(const Network& net, const ParamSet& params);

  /// tanh(mean) when deterministic; otherwise a reparameterized sample.
  std::vector<Real> act(const Image& obs, bool deterministic, Rng* rng = nullptr) const;

 private:
  const Network* net_;
  const ParamSet* params_;
};

}  // namespace smoothrace::nn
