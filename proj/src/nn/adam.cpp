#include "smoothrace/nn/adam.hpp"

#include <cmath>

#include "smoothrace/error.hpp"

namespace smoothrace::nn {

void adam_step(ParamSet& params, const GradSet& grads, const AdamConfig& cfg) {
  if (grads.size() != params.size())
    throw ShapeError("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params.size()) + " parameters");
  for (std::size_t i = 0; i < grads.size(); ++i)
    require_same_shape(params.entries[i].value, grads[i], "adam_step " + params.entries[i].name);

  params.step += 1;
  const double t = double(params.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  const Real b1 = Real(cfg.beta1), b2 = Real(cfg.beta2);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto& p = params.entries[i];
    const auto& g = grads[i];
    for (std::size_t k = 0; k < g.size(); ++k) {
      p.m[k] = b1 * p.m[k] + (Real(1) - b1) * g[k];
      p.v[k] = b2 * p.v[k] + (Real(1) - b2) * g[k] * g[k];
      const double m_hat = double(p.m[k]) / c1;
      const double v_hat = double(p.v[k]) / c2;
      p.value[k] -= static_cast<Real>(cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
    }
  }
}

void soft_update(ParamSet& target, const ParamSet& source, double tau) {
  if (target.size() != source.size()) throw ShapeError("soft_update: parameter count mismatch");
  const Real t = Real(tau), keep = Real(1) - Real(tau);
  for (std::size_t i = 0; i < source.size(); ++i) {
    auto& dst = target.entries[i].value;
    const auto& src = source.entries[i].value;
    require_same_shape(dst, src, "soft_update");
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = keep * dst[k] + t * src[k];
  }
}

}  // namespace smoothrace::nn
