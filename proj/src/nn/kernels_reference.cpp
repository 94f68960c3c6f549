#include "smoothrace/nn/kernels.hpp"

#include <algorithm>

namespace smoothrace::nn::kernels {

int padded_batch(int batch) { return (batch + 15) / 16 * 16; }

namespace reference {

namespace {

std::size_t act_index(int c, int y, int x, int n, int h, int w, int ld) {
  return ((std::size_t(c) * h + y) * w + x) * ld + n;
}

}  // namespace

void conv2d_forward(const ConvGeometry& g, std::span<const Real> in, std::span<const Real> w,
                    std::span<const Real> b, std::span<Real> out) {
  const int oh = g.out_h(), ow = g.out_w();
  for (int n = 0; n < g.batch; ++n)
    for (int oc = 0; oc < g.out_c; ++oc)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
          Real acc = b[oc];
          for (int ic = 0; ic < g.in_c; ++ic)
            for (int ky = 0; ky < g.kernel; ++ky)
              for (int kx = 0; kx < g.kernel; ++kx) {
                const int iy = y * g.stride - g.pad + ky;
                const int ix = x * g.stride - g.pad + kx;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                acc += w[((oc * g.in_c + ic) * g.kernel + ky) * g.kernel + kx] *
                       in[act_index(ic, iy, ix, n, g.in_h, g.in_w, g.ld)];
              }
          out[act_index(oc, y, x, n, oh, ow, g.ld)] = acc;
        }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const Real> gout,
                           std::span<const Real> w, std::span<Real> gin) {
  const int oh = g.out_h(), ow = g.out_w();
  std::fill(gin.begin(), gin.end(), Real(0));
  for (int n = 0; n < g.batch; ++n)
    for (int oc = 0; oc < g.out_c; ++oc)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
          const Real go = gout[act_index(oc, y, x, n, oh, ow, g.ld)];
          for (int ic = 0; ic < g.in_c; ++ic)
            for (int ky = 0; ky < g.kernel; ++ky)
              for (int kx = 0; kx < g.kernel; ++kx) {
                const int iy = y * g.stride - g.pad + ky;
                const int ix = x * g.stride - g.pad + kx;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                gin[act_index(ic, iy, ix, n, g.in_h, g.in_w, g.ld)] +=
                    go * w[((oc * g.in_c + ic) * g.kernel + ky) * g.kernel + kx];
              }
        }
}

void conv2d_backward_params(const ConvGeometry& g, std::span<const Real> in,
                            std::span<const Real> gout, std::span<Real> gw, std::span<Real> gb) {
  const int oh = g.out_h(), ow = g.out_w();
  std::fill(gw.begin(), gw.end(), Real(0));
  std::fill(gb.begin(), gb.end(), Real(0));
  for (int n = 0; n < g.batch; ++n)
    for (int oc = 0; oc < g.out_c; ++oc)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
          const Real go = gout[act_index(oc, y, x, n, oh, ow, g.ld)];
          gb[oc] += go;
          for (int ic = 0; ic < g.in_c; ++ic)
            for (int ky = 0; ky < g.kernel; ++ky)
              for (int kx = 0; kx < g.kernel; ++kx) {
                const int iy = y * g.stride - g.pad + ky;
                const int ix = x * g.stride - g.pad + kx;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                gw[((oc * g.in_c + ic) * g.kernel + ky) * g.kernel + kx] +=
                    go * in[act_index(ic, iy, ix, n, g.in_h, g.in_w, g.ld)];
              }
        }
}

void dense_forward(const DenseGeometry& g, std::span<const Real> x, std::span<const Real> w,
                   std::span<const Real> b, std::span<Real> y) {
  for (int n = 0; n < g.batch; ++n)
    for (int o = 0; o < g.out; ++o) {
      Real acc = b[o];
      for (int i = 0; i < g.in; ++i) acc += w[std::size_t(o) * g.in + i] * x[std::size_t(i) * g.ld + n];
      y[std::size_t(o) * g.ld + n] = acc;
    }
}

void dense_backward_input(const DenseGeometry& g, std::span<const Real> gy,
                          std::span<const Real> w, std::span<Real> gx) {
  std::fill(gx.begin(), gx.end(), Real(0));
  for (int n = 0; n < g.batch; ++n)
    for (int i = 0; i < g.in; ++i) {
      Real acc = 0;
      for (int o = 0; o < g.out; ++o) acc += w[std::size_t(o) * g.in + i] * gy[std::size_t(o) * g.ld + n];
      gx[std::size_t(i) * g.ld + n] = acc;
    }
}

void dense_backward_params(const DenseGeometry& g, std::span<const Real> x,
                           std::span<const Real> gy, std::span<Real> gw, std::span<Real> gb) {
  for (int o = 0; o < g.out; ++o) {
    Real bias = 0;
    for (int n = 0; n < g.batch; ++n) bias += gy[std::size_t(o) * g.ld + n];
    gb[o] = bias;
    for (int i = 0; i < g.in; ++i) {
      Real acc = 0;
      for (int n = 0; n < g.batch; ++n) acc += gy[std::size_t(o) * g.ld + n] * x[std::size_t(i) * g.ld + n];
      gw[std::size_t(o) * g.in + i] = acc;
    }
  }
}

}  // namespace reference
}  // namespace smoothrace::nn::kernels
