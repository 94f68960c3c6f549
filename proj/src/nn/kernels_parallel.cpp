#include <omp.h>

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "smoothrace/nn/kernels.hpp"

namespace smoothrace::nn::kernels {

namespace {

int g_max_threads = 0;

int team_size() { return g_max_threads > 0 ? g_max_threads : omp_get_max_threads(); }

using V = Real __attribute__((vector_size(64)));
using VU = Real __attribute__((vector_size(64), aligned(sizeof(Real)), may_alias));
constexpr int kLanes = int(sizeof(V) / sizeof(Real));
constexpr int kBlock = 4;
constexpr long kParallelWork = 1L << 18;

inline V load(const Real* p) { return *reinterpret_cast<const VU*>(p); }
inline void store(Real* p, V v) { *reinterpret_cast<VU*>(p) = v; }
inline V splat(Real a) { return V{} + a; }

// Broadcast product: C[m][c] = init[m] + sum_k a[m * a_ms + a_col[k]] * b_row[k][c],
// with k ascending for every output.
struct Bcast {
  int M, K;
  const Real* a;
  std::ptrdiff_t a_ms;
  const int* a_col;
  const Real* const* b_row;
  Real* c;
  std::ptrdiff_t c_ms;
  const Real* init;
};

template <int MB, int NV>
void bcast_tile(const Bcast& p, int m0, int c0) {
  V acc[MB][NV];
#pragma GCC unroll 16
  for (int i = 0; i < MB; ++i)
#pragma GCC unroll 16
    for (int j = 0; j < NV; ++j) acc[i][j] = splat(p.init ? p.init[m0 + i] : Real(0));
  for (int k = 0; k < p.K; ++k) {
    V b[NV];
    const Real* brow = p.b_row[k] + c0;
#pragma GCC unroll 16
    for (int j = 0; j < NV; ++j) b[j] = load(brow + j * kLanes);
    const Real* a = p.a + p.a_col[k] + m0 * p.a_ms;
#pragma GCC unroll 16
    for (int i = 0; i < MB; ++i) {
      const Real ai = a[i * p.a_ms];
#pragma GCC unroll 16
      for (int j = 0; j < NV; ++j) acc[i][j] += ai * b[j];
    }
  }
#pragma GCC unroll 16
  for (int i = 0; i < MB; ++i)
#pragma GCC unroll 16
    for (int j = 0; j < NV; ++j) store(p.c + (m0 + i) * p.c_ms + c0 + j * kLanes, acc[i][j]);
}

template <int MB>
void bcast_block(const Bcast& p, int m0, int vecs) {
  int v = 0;
  for (; v + 4 <= vecs; v += 4) bcast_tile<MB, 4>(p, m0, v * kLanes);
  for (; v < vecs; ++v) bcast_tile<MB, 1>(p, m0, v * kLanes);
}

// All rows of p over columns [0, ld); ld is a multiple of kLanes.
void bcast_rows(const Bcast& p, int ld) {
  const int vecs = ld / kLanes;
  int m0 = 0;
  for (; m0 + kBlock <= p.M; m0 += kBlock) bcast_block<kBlock>(p, m0, vecs);
  for (; m0 < p.M; ++m0) bcast_block<1>(p, m0, vecs);
}

// Row blocks of p spread over the team.
void bcast_parallel(const Bcast& p, int cols, long work) {
  const int blocks = (p.M + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static) num_threads(team_size()) if (work > kParallelWork)
  for (int blk = 0; blk < blocks; ++blk) {
    Bcast part = p;
    part.M = std::min(kBlock, p.M - blk * kBlock);
    part.a += std::ptrdiff_t(blk) * kBlock * p.a_ms;
    part.c += std::ptrdiff_t(blk) * kBlock * p.c_ms;
    if (part.init) part.init += blk * kBlock;
    bcast_rows(part, cols);
  }
}

// Batch reduction: C[m][l] = sum_q sum_n a_row(m, q)[n] * b_row[q][l][n]
// with a_row(m, q) = a + m * a_ms + q * a_qs. Lane partial sums run over
// (q, chunk) in order and are folded lane by lane at the end.
struct Reduce {
  int M, L, Q, ld;
  const Real* a;
  std::ptrdiff_t a_ms, a_qs;
  const Real* const* b_row;  // [Q][L]
  Real* c;
  std::ptrdiff_t c_ms;
};

inline Real fold(const Real* lanes) {
  Real s = 0;
  for (int i = 0; i < kLanes; ++i) s += lanes[i];
  return s;
}

template <int MB, int LB>
void reduce_tile(const Reduce& p, int m0, int l0) {
  V acc[MB][LB];
#pragma GCC unroll 16
  for (int i = 0; i < MB; ++i)
#pragma GCC unroll 16
    for (int j = 0; j < LB; ++j) acc[i][j] = V{};
  for (int q = 0; q < p.Q; ++q) {
    const Real* arow = p.a + m0 * p.a_ms + q * p.a_qs;
    const Real* const* brows = p.b_row + std::size_t(q) * p.L + l0;
    for (int n = 0; n < p.ld; n += kLanes) {
      V a[MB], b[LB];
#pragma GCC unroll 16
      for (int i = 0; i < MB; ++i) a[i] = load(arow + i * p.a_ms + n);
#pragma GCC unroll 16
      for (int j = 0; j < LB; ++j) b[j] = load(brows[j] + n);
#pragma GCC unroll 16
      for (int i = 0; i < MB; ++i)
#pragma GCC unroll 16
        for (int j = 0; j < LB; ++j) acc[i][j] += a[i] * b[j];
    }
  }
  Real lanes[MB][LB][kLanes];
#pragma GCC unroll 16
  for (int i = 0; i < MB; ++i)
#pragma GCC unroll 16
    for (int j = 0; j < LB; ++j) store(lanes[i][j], acc[i][j]);
  for (int i = 0; i < MB; ++i)
    for (int j = 0; j < LB; ++j) p.c[(m0 + i) * p.c_ms + l0 + j] = fold(lanes[i][j]);
}

void reduce_block(const Reduce& p, int m0, int l0) {
  const int mb = std::min(kBlock, p.M - m0), lb = std::min(kBlock, p.L - l0);
  if (mb == kBlock && lb == kBlock) {
    reduce_tile<kBlock, kBlock>(p, m0, l0);
    return;
  }
  if (mb == kBlock) {
    for (int l = l0; l < l0 + lb; ++l) reduce_tile<kBlock, 1>(p, m0, l);
    return;
  }
  for (int m = m0; m < m0 + mb; ++m)
    for (int l = l0; l < l0 + lb; ++l) reduce_tile<1, 1>(p, m, l);
}

void reduce(const Reduce& p) {
  const int mblocks = (p.M + kBlock - 1) / kBlock, lblocks = (p.L + kBlock - 1) / kBlock;
  const long work = long(p.M) * p.L * p.Q * p.ld;
#pragma omp parallel for collapse(2) schedule(static) num_threads(team_size()) if (work > kParallelWork)
  for (int mb = 0; mb < mblocks; ++mb)
    for (int lb = 0; lb < lblocks; ++lb) reduce_block(p, mb * kBlock, lb * kBlock);
}

// Per-thread scratch; the kernels are also called from parallel evaluation loops.
struct Scratch {
  std::vector<Real> zeros;
  std::vector<const Real*> rows;
  std::vector<int> cols;
  std::vector<Real> xt, gyt, out;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

const Real* zero_row(Scratch& s, int ld) {
  if (s.zeros.size() < std::size_t(ld)) s.zeros.assign(std::size_t(ld), Real(0));
  return s.zeros.data();
}

void require_padded(int ld) {
  if (ld % kLanes != 0) throw std::invalid_argument("batch stride must be a multiple of the vector width");
}

// n is a multiple of kLanes; element i always lands in lane i % kLanes.
Real row_sum(const Real* row, std::size_t n) {
  V acc{};
  for (std::size_t i = 0; i < n; i += kLanes) acc += load(row + i);
  Real lanes[kLanes];
  store(lanes, acc);
  return fold(lanes);
}

}  // namespace

void set_max_threads(int n) { g_max_threads = std::max(0, n); }
int max_threads() { return team_size(); }

namespace parallel {

void conv2d_forward(const ConvGeometry& g, std::span<const Real> in, std::span<const Real> w,
                    std::span<const Real> b, std::span<Real> out) {
  require_padded(g.ld);
  const int oh = g.out_h(), ow = g.out_w();
  const int kk = g.kernel * g.kernel, ckk = g.in_c * kk;
  const int P = oh * ow;
#pragma omp parallel for schedule(static) num_threads(team_size()) if (long(P) * g.out_c * ckk * g.ld > kParallelWork)
  for (int q = 0; q < P; ++q) {
    Scratch& s = scratch();
    s.rows.clear();
    s.cols.clear();
    const int y = q / ow, x = q % ow;
    for (int ic = 0; ic < g.in_c; ++ic)
      for (int ky = 0; ky < g.kernel; ++ky) {
        const int iy = y * g.stride - g.pad + ky;
        if (iy < 0 || iy >= g.in_h) continue;
        for (int kx = 0; kx < g.kernel; ++kx) {
          const int ix = x * g.stride - g.pad + kx;
          if (ix < 0 || ix >= g.in_w) continue;
          s.rows.push_back(in.data() + ((std::size_t(ic) * g.in_h + iy) * g.in_w + ix) * g.ld);
          s.cols.push_back(ic * kk + ky * g.kernel + kx);
        }
      }
    const Bcast p{g.out_c, int(s.rows.size()), w.data(), ckk, s.cols.data(), s.rows.data(),
                  out.data() + std::size_t(q) * g.ld, std::ptrdiff_t(P) * g.ld, b.data()};
    bcast_rows(p, g.ld);
  }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const Real> gout,
                           std::span<const Real> w, std::span<Real> gin) {
  require_padded(g.ld);
  const int oh = g.out_h(), ow = g.out_w();
  const int kk = g.kernel * g.kernel, ckk = g.in_c * kk;
  const int IP = g.in_h * g.in_w;
#pragma omp parallel for schedule(static) num_threads(team_size()) if (long(oh) * ow * g.out_c * ckk * g.ld > kParallelWork)
  for (int ip = 0; ip < IP; ++ip) {
    Scratch& s = scratch();
    s.rows.clear();
    s.cols.clear();
    const int iy = ip / g.in_w, ix = ip % g.in_w;
    // Output pixels whose window covers (iy, ix), in (oc, ky, kx) order.
    for (int oc = 0; oc < g.out_c; ++oc)
      for (int ky = 0; ky < g.kernel; ++ky) {
        const int ty = iy + g.pad - ky;
        if (ty < 0 || ty % g.stride != 0 || ty / g.stride >= oh) continue;
        for (int kx = 0; kx < g.kernel; ++kx) {
          const int tx = ix + g.pad - kx;
          if (tx < 0 || tx % g.stride != 0 || tx / g.stride >= ow) continue;
          s.rows.push_back(gout.data() + ((std::size_t(oc) * oh + ty / g.stride) * ow + tx / g.stride) * g.ld);
          s.cols.push_back(oc * ckk + ky * g.kernel + kx);
        }
      }
    Real* dst = gin.data() + std::size_t(ip) * g.ld;
    if (s.rows.empty()) {
      for (int ic = 0; ic < g.in_c; ++ic) std::fill_n(dst + std::size_t(ic) * IP * g.ld, g.ld, Real(0));
      continue;
    }
    const Bcast p{g.in_c, int(s.rows.size()), w.data(), kk, s.cols.data(), s.rows.data(),
                  dst, std::ptrdiff_t(IP) * g.ld, nullptr};
    bcast_rows(p, g.ld);
  }
}

void conv2d_backward_params(const ConvGeometry& g, std::span<const Real> in,
                            std::span<const Real> gout, std::span<Real> gw, std::span<Real> gb) {
  require_padded(g.ld);
  const int oh = g.out_h(), ow = g.out_w();
  const int kk = g.kernel * g.kernel, ckk = g.in_c * kk;
  const int P = oh * ow;
  Scratch& s = scratch();
  const Real* zero = zero_row(s, g.ld);
  s.rows.resize(std::size_t(P) * ckk);
  for (int q = 0; q < P; ++q) {
    const int y = q / ow, x = q % ow;
    for (int ic = 0; ic < g.in_c; ++ic)
      for (int ky = 0; ky < g.kernel; ++ky)
        for (int kx = 0; kx < g.kernel; ++kx) {
          const int iy = y * g.stride - g.pad + ky, ix = x * g.stride - g.pad + kx;
          const bool inside = iy >= 0 && iy < g.in_h && ix >= 0 && ix < g.in_w;
          s.rows[std::size_t(q) * ckk + ic * kk + ky * g.kernel + kx] =
              inside ? in.data() + ((std::size_t(ic) * g.in_h + iy) * g.in_w + ix) * g.ld : zero;
        }
  }
  reduce({g.out_c, ckk, P, g.ld, gout.data(), std::ptrdiff_t(P) * g.ld, g.ld, s.rows.data(), gw.data(), ckk});
  for (int oc = 0; oc < g.out_c; ++oc)
    gb[oc] = row_sum(gout.data() + std::size_t(oc) * P * g.ld, std::size_t(P) * g.ld);
}

void dense_forward(const DenseGeometry& g, std::span<const Real> x, std::span<const Real> w,
                   std::span<const Real> b, std::span<Real> y) {
  require_padded(g.ld);
  Scratch& s = scratch();
  s.rows.resize(g.in);
  s.cols.resize(g.in);
  for (int i = 0; i < g.in; ++i) {
    s.rows[i] = x.data() + std::size_t(i) * g.ld;
    s.cols[i] = i;
  }
  bcast_parallel({g.out, g.in, w.data(), g.in, s.cols.data(), s.rows.data(), y.data(), g.ld, b.data()}, g.ld,
                 long(g.out) * g.in * g.ld);
}

void dense_backward_input(const DenseGeometry& g, std::span<const Real> gy,
                          std::span<const Real> w, std::span<Real> gx) {
  require_padded(g.ld);
  Scratch& s = scratch();
  s.rows.resize(g.out);
  s.cols.resize(g.out);
  for (int o = 0; o < g.out; ++o) {
    s.rows[o] = gy.data() + std::size_t(o) * g.ld;
    s.cols[o] = o * g.in;
  }
  bcast_parallel({g.in, g.out, w.data(), 1, s.cols.data(), s.rows.data(), gx.data(), g.ld, nullptr}, g.ld,
                 long(g.out) * g.in * g.ld);
}

void dense_backward_params(const DenseGeometry& g, std::span<const Real> x,
                           std::span<const Real> gy, std::span<Real> gw, std::span<Real> gb) {
  require_padded(g.ld);
  // Batch-major copies turn the reduction over n into a broadcast product
  // with k = n, accumulated in batch order.
  Scratch& s = scratch();
  const int wide = (g.in + kLanes - 1) / kLanes * kLanes;
  s.xt.assign(std::size_t(g.batch) * wide, Real(0));
  s.gyt.resize(std::size_t(g.batch) * g.out);
  s.out.resize(std::size_t(g.out) * wide);
  for (int i = 0; i < g.in; ++i)
    for (int n = 0; n < g.batch; ++n) s.xt[std::size_t(n) * wide + i] = x[std::size_t(i) * g.ld + n];
  for (int o = 0; o < g.out; ++o)
    for (int n = 0; n < g.batch; ++n) s.gyt[std::size_t(n) * g.out + o] = gy[std::size_t(o) * g.ld + n];
  s.rows.resize(g.batch);
  s.cols.resize(g.batch);
  for (int n = 0; n < g.batch; ++n) {
    s.rows[n] = s.xt.data() + std::size_t(n) * wide;
    s.cols[n] = n * g.out;
  }
  bcast_parallel({g.out, g.batch, s.gyt.data(), 1, s.cols.data(), s.rows.data(), s.out.data(), wide, nullptr}, wide,
                 long(g.out) * g.in * g.batch);
  for (int o = 0; o < g.out; ++o)
    std::copy_n(s.out.data() + std::size_t(o) * wide, g.in, gw.data() + std::size_t(o) * g.in);
  for (int o = 0; o < g.out; ++o) gb[o] = row_sum(gy.data() + std::size_t(o) * g.ld, std::size_t(g.ld));
}

}  // namespace parallel
}  // namespace smoothrace::nn::kernels
