#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smoothrace/nn/tensor.hpp"
#include "smoothrace/rng.hpp"

namespace smoothrace::nn {

enum class Activation { relu, tanh };
enum class Head { gaussian_policy, q_value };

std::string to_string(Activation a);
std::string to_string(Head h);
Activation parse_activation(const std::string& s);
Head parse_head(const std::string& s);

struct ConvLayerSpec {
  int out_channels = 8;
  int kernel = 3;
  int stride = 2;
  friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

/// Conv trunk (zero padding kernel/2), flatten, optional side input
/// concatenated after the trunk, hidden dense layers, linear output layer
/// sized by the head.
struct NetworkSpec {
  int in_channels = 1;
  int in_height = 24;
  int in_width = 32;
  std::vector<ConvLayerSpec> conv{{8, 3, 2}, {16, 3, 2}, {16, 3, 2}};
  std::vector<int> dense{128, 64};
  Activation activation = Activation::relu;
  Head head = Head::gaussian_policy;
  int action_dim = 2;
  /// Width of the vector concatenated after the conv trunk (critics take the action).
  int side_dim = 0;

  int output_width() const { return head == Head::gaussian_policy ? 2 * action_dim : 1; }
  void validate() const;
  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

NetworkSpec policy_spec(int height, int width);
NetworkSpec critic_spec(int height, int width);

struct Parameter {
  std::string name;
  Tensor value;
  Tensor m;  // Adam first moment
  Tensor v;  // Adam second moment
};

struct ParamSet {
  std::vector<Parameter> entries;
  std::int64_t step = 0;  // Adam steps taken

  std::size_t size() const { return entries.size(); }
  std::size_t scalar_count() const;
  const Parameter& find(const std::string& name) const;
  Parameter& find(const std::string& name);
  /// Flat copy of every value in manifest order.
  std::vector<Real> flatten() const;
  void check_finite(const std::string& where) const;
};

/// Gradients aligned one-to-one with ParamSet::entries.
using GradSet = std::vector<Tensor>;

GradSet zero_grads(const ParamSet& params);
void accumulate(GradSet& into, const GradSet& from);

struct LayerCache {
  Tensor pre;   // before activation
  Tensor post;  // after activation (input to the next layer)
};

/// Activations in the kernel layout: [C, H, W, ld] for conv layers and
/// [F, ld] for dense layers, with the batch innermost.
struct ForwardCache {
  bool valid = false;
  int batch = 0;
  int ld = 0;
  Tensor input;
  std::vector<LayerCache> conv;
  Tensor dense_input;  // flattened trunk output with side input rows appended
  std::vector<LayerCache> dense;
};

enum class BackwardScope {
  all,        // every parameter
  side_only,  // only the gradient w.r.t. the side input; parameter grads stay zero
};

class Network {
 public:
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }

  /// Fan-in scaled uniform initialization.
  ParamSet init(Rng& rng) const;

  /// batch is N x C x H x W; side (when side_dim > 0) is N x side_dim.
  Tensor forward(const ParamSet& params, const Tensor& batch, const Tensor* side = nullptr,
                 ForwardCache* cache = nullptr) const;

  GradSet backward(const ParamSet& params, const ForwardCache& cache, const Tensor& upstream,
                   Tensor* side_grad = nullptr, BackwardScope scope = BackwardScope::all) const;

 private:
  void check_params(const ParamSet& params) const;

  NetworkSpec spec_;
  struct ConvShape {
    int in_c, in_h, in_w, out_c, kernel, stride, pad, out_h, out_w;
  };
  std::vector<ConvShape> conv_shapes_;
  int flat_width_ = 0;
};

}  // namespace smoothrace::nn
