#pragma once

#include <span>

#include "smoothrace/real.hpp"

namespace smoothrace::nn::kernels {

// Activations are stored feature-major with the batch innermost: a conv
// activation is [C, H, W, ld] and a dense activation is [F, ld], where
// ld >= batch and columns batch..ld-1 are padding. Forward outputs leave
// padding unspecified; gradient inputs (gout, gy) must carry zero padding,
// and gradient outputs then do too.

/// Batch stride used by the network: batch rounded up to a multiple of 16.
int padded_batch(int batch);

/// Square kernels, symmetric zero padding, weights [out_c, in_c, k, k].
struct ConvGeometry {
  int batch = 1;
  int ld = 1;
  int in_c = 1;
  int in_h = 1;
  int in_w = 1;
  int out_c = 1;
  int kernel = 1;
  int stride = 1;
  int pad = 0;

  int out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }
  std::size_t in_size() const { return std::size_t(in_c) * in_h * in_w * ld; }
  std::size_t out_size() const { return std::size_t(out_c) * out_h() * out_w() * ld; }
  std::size_t weight_size() const { return std::size_t(out_c) * in_c * kernel * kernel; }
};

/// y[o, n] = b[o] + sum_i w[o, i] x[i, n], weights [out, in].
struct DenseGeometry {
  int batch = 1;
  int ld = 1;
  int in = 1;
  int out = 1;
};

// Both namespaces expose the same entry points. `reference` is the plain
// serial formulation used as the test oracle; `parallel` is what the network
// runs. Every parallel output element is produced by exactly one thread with
// a fixed reduction order, so results do not depend on the thread count.
// Gradient outputs are overwritten, not accumulated.

namespace reference {
void conv2d_forward(const ConvGeometry& g, std::span<const Real> in, std::span<const Real> w,
                    std::span<const Real> b, std::span<Real> out);
void conv2d_backward_input(const ConvGeometry& g, std::span<const Real> gout,
                           std::span<const Real> w, std::span<Real> gin);
void conv2d_backward_params(const ConvGeometry& g, std::span<const Real> in,
                            std::span<const Real> gout, std::span<Real> gw, std::span<Real> gb);
void dense_forward(const DenseGeometry& g, std::span<const Real> x, std::span<const Real> w,
                   std::span<const Real> b, std::span<Real> y);
void dense_backward_input(const DenseGeometry& g, std::span<const Real> gy,
                          std::span<const Real> w, std::span<Real> gx);
void dense_backward_params(const DenseGeometry& g, std::span<const Real> x,
                           std::span<const Real> gy, std::span<Real> gw, std::span<Real> gb);
}  // namespace reference

namespace parallel {
void conv2d_forward(const ConvGeometry& g, std::span<const Real> in, std::span<const Real> w,
                    std::span<const Real> b, std::span<Real> out);
void conv2d_backward_input(const ConvGeometry& g, std::span<const Real> gout,
                           std::span<const Real> w, std::span<Real> gin);
void conv2d_backward_params(const ConvGeometry& g, std::span<const Real> in,
                            std::span<const Real> gout, std::span<Real> gw, std::span<Real> gb);
void dense_forward(const DenseGeometry& g, std::span<const Real> x, std::span<const Real> w,
                   std::span<const Real> b, std::span<Real> y);
void dense_backward_input(const DenseGeometry& g, std::span<const Real> gy,
                          std::span<const Real> w, std::span<Real> gx);
void dense_backward_params(const DenseGeometry& g, std::span<const Real> x,
                           std::span<const Real> gy, std::span<Real> gw, std::span<Real> gb);
}  // namespace parallel

/// Caps the OpenMP team size used by the parallel kernels (0 = runtime default).
void set_max_threads(int n);
int max_threads();

}  // namespace smoothrace::nn::kernels
