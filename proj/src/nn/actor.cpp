#include "smoothrace/nn/actor.hpp"

#include "smoothrace/error.hpp"
#include "smoothrace/nn/policy.hpp"

namespace smoothrace::nn {

Tensor images_to_batch(const std::vector<const Image*>& images) {
  if (images.empty()) throw ShapeError("cannot batch zero images");
  const int w = images.front()->width, h = images.front()->height;
  Tensor t({images.size(), 1, std::size_t(h), std::size_t(w)});
  std::size_t off = 0;
  for (const Image* img : images) {
    if (img->width != w || img->height != h) throw ShapeError("images in a batch must share dimensions");
    for (float p : img->pixels) t[off++] = static_cast<Real>(p);
  }
  return t;
}

Tensor image_to_batch(const Image& image) { return images_to_batch({&image}); }

ActorPolicy::ActorPolicy(const Network& net, const ParamSet& params) : net_(&net), params_(&params) {
  if (net.spec().head != Head::gaussian_policy) throw ParameterError("ActorPolicy needs a gaussian-policy network");
}

std::vector<Real> ActorPolicy::act(const Image& obs, bool deterministic, Rng* rng) const {
  const int a = net_->spec().action_dim;
  const Tensor raw = net_->forward(*params_, image_to_batch(obs));
  const auto heads = split_policy_output(raw, a);
  std::vector<Real> action(a);
  if (deterministic) {
    deterministic_action(heads.mean.row(0), action);
  } else {
    if (rng == nullptr) throw ParameterError("stochastic action needs a random source");
    std::vector<Real> noise(a);
    for (auto& e : noise) e = static_cast<Real>(rng->normal());
    sample_squashed_gaussian(heads.mean.row(0), heads.log_std.row(0), noise, action);
  }
  return action;
}

}  // namespace smoothrace::nn
