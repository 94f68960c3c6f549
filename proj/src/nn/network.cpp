#include "smoothrace/nn/network.hpp"

#include <algorithm>
#include <cmath>

#include "smoothrace/error.hpp"
#include "smoothrace/nn/kernels.hpp"

namespace smoothrace::nn {

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }
std::string to_string(Head h) { return h == Head::gaussian_policy ? "gaussian_policy" : "q_value"; }

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ParameterError("unknown activation '" + s + "'");
}

Head parse_head(const std::string& s) {
  if (s == "gaussian_policy") return Head::gaussian_policy;
  if (s == "q_value") return Head::q_value;
  throw ParameterError("unknown head '" + s + "'");
}

void NetworkSpec::validate() const {
  if (in_channels <= 0 || in_height <= 0 || in_width <= 0)
    throw ParameterError("network input dimensions must be positive");
  if (action_dim <= 0) throw ParameterError("action_dim must be positive");
  if (side_dim < 0) throw ParameterError("side_dim must be non-negative");
  for (const auto& c : conv)
    if (c.out_channels <= 0 || c.kernel <= 0 || c.stride <= 0)
      throw ParameterError("conv layer parameters must be positive");
  for (int d : dense)
    if (d <= 0) throw ParameterError("dense widths must be positive");
}

NetworkSpec policy_spec(int height, int width) {
  NetworkSpec s;
  s.in_height = height;
  s.in_width = width;
  s.head = Head::gaussian_policy;
  return s;
}

NetworkSpec critic_spec(int height, int width) {
  NetworkSpec s = policy_spec(height, width);
  s.head = Head::q_value;
  s.side_dim = s.action_dim;
  return s;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : entries) n += p.value.size();
  return n;
}

const Parameter& ParamSet::find(const std::string& name) const {
  for (const auto& p : entries)
    if (p.name == name) return p;
  throw ParameterError("no parameter named '" + name + "'");
}

Parameter& ParamSet::find(const std::string& name) {
  for (auto& p : entries)
    if (p.name == name) return p;
  throw ParameterError("no parameter named '" + name + "'");
}

std::vector<Real> ParamSet::flatten() const {
  std::vector<Real> out;
  out.reserve(scalar_count());
  for (const auto& p : entries) out.insert(out.end(), p.value.values.begin(), p.value.values.end());
  return out;
}

void ParamSet::check_finite(const std::string& where) const {
  for (const auto& p : entries) p.value.check_finite(where + "/" + p.name);
}

GradSet zero_grads(const ParamSet& params) {
  GradSet g;
  g.reserve(params.size());
  for (const auto& p : params.entries) g.emplace_back(p.value.shape);
  return g;
}

void accumulate(GradSet& into, const GradSet& from) {
  if (into.size() != from.size()) throw ShapeError("gradient sets differ in length");
  for (std::size_t i = 0; i < into.size(); ++i) {
    require_same_shape(into[i], from[i], "accumulate");
    for (std::size_t k = 0; k < into[i].size(); ++k) into[i][k] += from[i][k];
  }
}

namespace {

void activate(Activation act, const Tensor& pre, Tensor& post) {
  post = pre;
  if (act == Activation::relu) {
    for (auto& v : post.values) v = v > Real(0) ? v : Real(0);
  } else {
    for (auto& v : post.values) v = std::tanh(v);
  }
}

// grad is dL/dpost on entry, dL/dpre on exit.
void activate_backward(Activation act, const LayerCache& layer, Tensor& grad) {
  if (act == Activation::relu) {
    for (std::size_t i = 0; i < grad.size(); ++i)
      if (!(layer.pre[i] > Real(0))) grad[i] = 0;
  } else {
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= Real(1) - layer.post[i] * layer.post[i];
  }
}

}  // namespace

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  int c = spec_.in_channels, h = spec_.in_height, w = spec_.in_width;
  for (const auto& layer : spec_.conv) {
    ConvShape s{c, h, w, layer.out_channels, layer.kernel, layer.stride, layer.kernel / 2, 0, 0};
    s.out_h = (h + 2 * s.pad - s.kernel) / s.stride + 1;
    s.out_w = (w + 2 * s.pad - s.kernel) / s.stride + 1;
    if (s.out_h <= 0 || s.out_w <= 0) throw ShapeError("conv stack collapses the input to nothing");
    conv_shapes_.push_back(s);
    c = s.out_c;
    h = s.out_h;
    w = s.out_w;
  }
  flat_width_ = c * h * w;
}

ParamSet Network::init(Rng& rng) const {
  ParamSet ps;
  auto add = [&](const std::string& name, std::vector<std::size_t> shape, double bound) {
    Parameter p;
    p.name = name;
    p.value = Tensor(shape);
    for (auto& v : p.value.values) v = static_cast<Real>(rng.uniform(-bound, bound));
    p.m = Tensor(shape);
    p.v = Tensor(shape);
    ps.entries.push_back(std::move(p));
  };
  for (std::size_t i = 0; i < conv_shapes_.size(); ++i) {
    const auto& s = conv_shapes_[i];
    const double fan_in = double(s.in_c) * s.kernel * s.kernel;
    add("conv" + std::to_string(i) + ".weight",
        {std::size_t(s.out_c), std::size_t(s.in_c), std::size_t(s.kernel), std::size_t(s.kernel)},
        1.0 / std::sqrt(fan_in));
    add("conv" + std::to_string(i) + ".bias", {std::size_t(s.out_c)}, 0.0);
  }
  int in = flat_width_ + spec_.side_dim;
  std::vector<int> widths = spec_.dense;
  widths.push_back(spec_.output_width());
  for (std::size_t j = 0; j < widths.size(); ++j) {
    add("dense" + std::to_string(j) + ".weight", {std::size_t(widths[j]), std::size_t(in)},
        1.0 / std::sqrt(double(in)));
    add("dense" + std::to_string(j) + ".bias", {std::size_t(widths[j])}, 0.0);
    in = widths[j];
  }
  return ps;
}

void Network::check_params(const ParamSet& params) const {
  const std::size_t expected = 2 * (conv_shapes_.size() + spec_.dense.size() + 1);
  if (params.size() != expected)
    throw ShapeError("parameter set has " + std::to_string(params.size()) + " tensors, network needs " +
                     std::to_string(expected));
  std::size_t p = 0;
  auto expect = [&](std::vector<std::size_t> shape) {
    const Parameter& e = params.entries[p++];
    if (e.value.shape != shape)
      throw ShapeError("parameter " + e.name + " has shape " + shape_string(e.value.shape) + ", expected " +
                       shape_string(shape));
  };
  for (const auto& s : conv_shapes_) {
    expect({std::size_t(s.out_c), std::size_t(s.in_c), std::size_t(s.kernel), std::size_t(s.kernel)});
    expect({std::size_t(s.out_c)});
  }
  std::size_t in = std::size_t(flat_width_ + spec_.side_dim);
  for (std::size_t j = 0; j <= spec_.dense.size(); ++j) {
    const std::size_t out = std::size_t(j < spec_.dense.size() ? spec_.dense[j] : spec_.output_width());
    expect({out, in});
    expect({out});
    in = out;
  }
}

Tensor Network::forward(const ParamSet& params, const Tensor& batch, const Tensor* side,
                        ForwardCache* cache) const {
  check_params(params);
  if (batch.rank() != 4 || batch.dim(0) == 0 || batch.dim(1) != std::size_t(spec_.in_channels) ||
      batch.dim(2) != std::size_t(spec_.in_height) || batch.dim(3) != std::size_t(spec_.in_width))
    throw ShapeError("network input must be N x " + std::to_string(spec_.in_channels) + " x " +
                     std::to_string(spec_.in_height) + " x " + std::to_string(spec_.in_width) +
                     " with N > 0, got " + shape_string(batch.shape));
  const std::size_t n = batch.dim(0);
  if (spec_.side_dim > 0) {
    if (side == nullptr || side->rank() != 2 || side->dim(0) != n ||
        side->dim(1) != std::size_t(spec_.side_dim))
      throw ShapeError("side input must be N x " + std::to_string(spec_.side_dim));
  } else if (side != nullptr) {
    throw ShapeError("network takes no side input");
  }

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  const int nb = int(n);
  const int ld = kernels::padded_batch(nb);
  c.valid = false;
  c.batch = nb;
  c.ld = ld;
  c.conv.assign(conv_shapes_.size(), {});
  c.dense.assign(spec_.dense.size() + 1, {});

  const std::size_t image = batch.size() / n;
  c.input = Tensor({image, std::size_t(ld)});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t f = 0; f < image; ++f) c.input[f * ld + r] = batch[r * image + f];

  const Tensor* x = &c.input;
  std::size_t p = 0;
  for (std::size_t i = 0; i < conv_shapes_.size(); ++i) {
    const auto& s = conv_shapes_[i];
    kernels::ConvGeometry g{nb, ld, s.in_c, s.in_h, s.in_w, s.out_c, s.kernel, s.stride, s.pad};
    auto& layer = c.conv[i];
    layer.pre = Tensor({std::size_t(s.out_c) * s.out_h * s.out_w, std::size_t(ld)});
    kernels::parallel::conv2d_forward(g, x->span(), params.entries[p].value.span(),
                                      params.entries[p + 1].value.span(), layer.pre.span());
    activate(spec_.activation, layer.pre, layer.post);
    x = &layer.post;
    p += 2;
  }

  const int in_width = flat_width_ + spec_.side_dim;
  c.dense_input = Tensor({std::size_t(in_width), std::size_t(ld)});
  std::copy(x->values.begin(), x->values.begin() + std::size_t(flat_width_) * ld, c.dense_input.values.begin());
  if (side)
    for (std::size_t r = 0; r < n; ++r)
      for (int k = 0; k < spec_.side_dim; ++k)
        c.dense_input[std::size_t(flat_width_ + k) * ld + r] = (*side)[r * spec_.side_dim + k];

  x = &c.dense_input;
  int in = in_width;
  for (std::size_t j = 0; j < c.dense.size(); ++j) {
    const bool last = j + 1 == c.dense.size();
    const int out = last ? spec_.output_width() : spec_.dense[j];
    auto& layer = c.dense[j];
    layer.pre = Tensor({std::size_t(out), std::size_t(ld)});
    kernels::parallel::dense_forward({nb, ld, in, out}, x->span(), params.entries[p].value.span(),
                                     params.entries[p + 1].value.span(), layer.pre.span());
    if (last)
      layer.post = layer.pre;
    else
      activate(spec_.activation, layer.pre, layer.post);
    x = &layer.post;
    in = out;
    p += 2;
  }
  const std::size_t width = std::size_t(spec_.output_width());
  Tensor result({n, width});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t o = 0; o < width; ++o) result[r * width + o] = (*x)[o * ld + r];
  result.check_finite("network output");
  c.valid = true;
  return result;
}

GradSet Network::backward(const ParamSet& params, const ForwardCache& cache, const Tensor& upstream,
                          Tensor* side_grad, BackwardScope scope) const {
  if (!cache.valid) throw StateError("backward called without a matching forward cache");
  check_params(params);
  const std::size_t n = std::size_t(cache.batch);
  const int ld = cache.ld;
  const std::size_t width = std::size_t(spec_.output_width());
  if (upstream.shape != std::vector<std::size_t>{n, width})
    throw ShapeError("upstream gradient shape " + shape_string(upstream.shape) +
                     " does not match network output");
  if (side_grad && spec_.side_dim == 0) throw ShapeError("network has no side input");

  GradSet grads = zero_grads(params);
  const std::size_t conv_params = 2 * conv_shapes_.size();
  const bool want_params = scope == BackwardScope::all;

  Tensor grad({width, std::size_t(ld)});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t o = 0; o < width; ++o) grad[o * ld + r] = upstream[r * width + o];

  for (std::size_t jj = cache.dense.size(); jj-- > 0;) {
    const bool last = jj + 1 == cache.dense.size();
    if (!last) activate_backward(spec_.activation, cache.dense[jj], grad);
    const Tensor& input = jj == 0 ? cache.dense_input : cache.dense[jj - 1].post;
    const int in = int(input.dim(0));
    const int out = int(grad.dim(0));
    const std::size_t p = conv_params + 2 * jj;
    kernels::DenseGeometry g{int(n), ld, in, out};
    if (want_params)
      kernels::parallel::dense_backward_params(g, input.span(), grad.span(), grads[p].span(),
                                               grads[p + 1].span());
    Tensor gin({std::size_t(in), std::size_t(ld)});
    kernels::parallel::dense_backward_input(g, grad.span(), params.entries[p].value.span(), gin.span());
    grad = std::move(gin);
  }

  if (side_grad) {
    *side_grad = Tensor({n, std::size_t(spec_.side_dim)});
    for (std::size_t r = 0; r < n; ++r)
      for (int k = 0; k < spec_.side_dim; ++k)
        (*side_grad)[r * spec_.side_dim + k] = grad[std::size_t(flat_width_ + k) * ld + r];
  }
  if (!want_params || conv_shapes_.empty()) return grads;

  // The trunk gradient is the leading flat_width_ rows.
  grad.values.resize(std::size_t(flat_width_) * ld);
  grad.shape = {std::size_t(flat_width_), std::size_t(ld)};

  for (std::size_t ii = conv_shapes_.size(); ii-- > 0;) {
    const auto& s = conv_shapes_[ii];
    activate_backward(spec_.activation, cache.conv[ii], grad);
    const Tensor& input = ii == 0 ? cache.input : cache.conv[ii - 1].post;
    kernels::ConvGeometry g{int(n), ld, s.in_c, s.in_h, s.in_w, s.out_c, s.kernel, s.stride, s.pad};
    const std::size_t p = 2 * ii;
    kernels::parallel::conv2d_backward_params(g, input.span(), grad.span(), grads[p].span(),
                                              grads[p + 1].span());
    if (ii > 0) {
      Tensor gin(input.shape);
      kernels::parallel::conv2d_backward_input(g, grad.span(), params.entries[p].value.span(),
                                               gin.span());
      grad = std::move(gin);
    }
  }
  for (const auto& g : grads) g.check_finite("network gradient");
  return grads;
}

}  // namespace smoothrace::nn
