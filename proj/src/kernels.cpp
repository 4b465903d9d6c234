// Copyright 2026 The adapter3d Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>

#include "adapter3d/kernels.hpp"
#include "parallel.hpp"

namespace adapter3d::kernels {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t n, std::size_t k, std::size_t m) {
  const double* A = a.data();
  const double* B = b.data();
  double* C = c.data();
#pragma omp parallel for schedule(static) if (n * k * m > kParallelThreshold)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* row = C + i * m;
    std::fill(row, row + m, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      const double* brow = B + p * m;
#pragma omp simd
      for (std::size_t j = 0; j < m; ++j) row[j] += av * brow[j];
    }
  }
}

void matmul_grad_a(std::span<const double> dc, std::span<const double> b, std::span<double> da,
                   std::size_t n, std::size_t k, std::size_t m) {
  const double* DC = dc.data();
  const double* B = b.data();
  double* DA = da.data();
#pragma omp parallel for schedule(static) if (n * k * m > kParallelThreshold)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t p = 0; p < k; ++p) {
      double acc = 0.0;
      const double* brow = B + p * m;
      const double* grow = DC + i * m;
#pragma omp simd reduction(+ : acc)
      for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
      DA[i * k + p] += acc;
    }
  }
}

void matmul_grad_b(std::span<const double> a, std::span<const double> dc, std::span<double> db,
                   std::size_t n, std::size_t k, std::size_t m) {
  const double* A = a.data();
  const double* DC = dc.data();
  // Rows are split into fixed-size chunks whose partial sums are combined in
  // chunk order, independent of the thread count.
  constexpr std::size_t kRows = 256;
  const std::size_t chunks = (n + kRows - 1) / kRows;
  std::vector<double> partial(chunks * k * m, 0.0);
#pragma omp parallel for schedule(static) if (n * k * m > kParallelThreshold)
  for (std::ptrdiff_t cc = 0; cc < static_cast<std::ptrdiff_t>(chunks); ++cc) {
    const auto ci = static_cast<std::size_t>(cc);
    double* acc = partial.data() + ci * k * m;
    const std::size_t end = std::min(n, (ci + 1) * kRows);
    for (std::size_t i = ci * kRows; i < end; ++i) {
      const double* grow = DC + i * m;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = A[i * k + p];
        double* dst = acc + p * m;
#pragma omp simd
        for (std::size_t j = 0; j < m; ++j) dst[j] += av * grow[j];
      }
    }
  }
  for (std::size_t ci = 0; ci < chunks; ++ci) {
    const double* src = partial.data() + ci * k * m;
    for (std::size_t idx = 0; idx < k * m; ++idx) db[idx] += src[idx];
  }
}

namespace {

constexpr std::size_t kLane = 8;

std::size_t round_up(std::size_t v, std::size_t m) { return (v + m - 1) / m * m; }

// Zero-padded copy of a [c,h,w] tensor: `pad` rows/cols on each side, and the
// row stride widened so that full kLane-wide reads past w stay in bounds.
struct Padded {
  std::vector<double> data;
  std::size_t rows, stride;
};

Padded pad_planes(const double* x, std::size_t c, std::size_t h, std::size_t wd, std::size_t pad) {
  Padded p{{}, h + 2 * pad, round_up(wd, kLane) + 2 * pad};
  p.data.assign(c * p.rows * p.stride, 0.0);
  for (std::size_t ic = 0; ic < c; ++ic)
    for (std::size_t row = 0; row < h; ++row)
      std::copy_n(x + (ic * h + row) * wd, wd,
                  p.data.data() + (ic * p.rows + row + pad) * p.stride + pad);
  return p;
}

// One output row for OB consecutive output channels. `wt` is [c,k,k,OB].
template <std::size_t OB>
void conv_row(const Padded& xp, const double* wt, double* const* yrows, std::size_t c,
              std::size_t row, std::size_t wd, std::size_t k) {
  for (std::size_t col0 = 0; col0 < wd; col0 += kLane) {
    double acc[OB][kLane] = {};
    for (std::size_t ic = 0; ic < c; ++ic) {
      for (std::size_t ky = 0; ky < k; ++ky) {
        const double* src = xp.data.data() + (ic * xp.rows + row + ky) * xp.stride + col0;
        for (std::size_t kx = 0; kx < k; ++kx) {
          const double* wv = wt + ((ic * k + ky) * k + kx) * OB;
          for (std::size_t b = 0; b < OB; ++b) {
#pragma omp simd
            for (std::size_t j = 0; j < kLane; ++j) acc[b][j] += wv[b] * src[kx + j];
          }
        }
      }
    }
    const std::size_t n = std::min(kLane, wd - col0);
    for (std::size_t b = 0; b < OB; ++b) std::copy_n(acc[b], n, yrows[b] + col0);
  }
}

// y[o,h,w] = conv(x[c,h,w], w[o,c,k,k]) with output channels handled in
// blocks of four.
void conv_forward(const double* X, const double* W, double* Y, std::size_t c, std::size_t h,
                  std::size_t wd, std::size_t o, std::size_t k) {
  constexpr std::size_t kOut = 4;
  const Padded xp = pad_planes(X, c, h, wd, k / 2);
  const std::size_t blocks = (o + kOut - 1) / kOut;
  // Repack weights per block as [c,k,k,kOut], zero for missing channels.
  std::vector<double> wt(blocks * c * k * k * kOut, 0.0);
  for (std::size_t oc = 0; oc < o; ++oc)
    for (std::size_t t = 0; t < c * k * k; ++t)
      wt[((oc / kOut) * c * k * k + t) * kOut + oc % kOut] = W[oc * c * k * k + t];
#pragma omp parallel for schedule(static) if (o * c * h * wd * k * k > kParallelThreshold)
  for (std::ptrdiff_t it = 0; it < static_cast<std::ptrdiff_t>(blocks * h); ++it) {
    const std::size_t blk = static_cast<std::size_t>(it) / h;
    const std::size_t row = static_cast<std::size_t>(it) % h;
    std::vector<double> local_sink;
    double* rows[kOut];
    for (std::size_t b = 0; b < kOut; ++b) {
      const std::size_t oc = blk * kOut + b;
      if (oc < o) {
        rows[b] = Y + (oc * h + row) * wd;
      } else {
        if (local_sink.empty()) local_sink.resize(round_up(wd, kLane));
        rows[b] = local_sink.data();
      }
    }
    conv_row<kOut>(xp, wt.data() + blk * c * k * k * kOut, rows, c, row, wd, k);
  }
}

}  // namespace

void conv2d(std::span<const double> x, std::span<const double> w, std::span<double> y,
            std::size_t c, std::size_t h, std::size_t wd, std::size_t o, std::size_t k) {
  conv_forward(x.data(), w.data(), y.data(), c, h, wd, o, k);
}

// The input gradient is the forward convolution of dy with the spatially
// flipped, channel-transposed kernel.
void conv2d_grad_input(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                       std::size_t c, std::size_t h, std::size_t wd, std::size_t o, std::size_t k) {
  std::vector<double> flipped(c * o * k * k);
  for (std::size_t oc = 0; oc < o; ++oc)
    for (std::size_t ic = 0; ic < c; ++ic)
      for (std::size_t ky = 0; ky < k; ++ky)
        for (std::size_t kx = 0; kx < k; ++kx)
          flipped[((ic * o + oc) * k + (k - 1 - ky)) * k + (k - 1 - kx)] =
              w[((oc * c + ic) * k + ky) * k + kx];
  std::vector<double> tmp(c * h * wd);
  conv_forward(dy.data(), flipped.data(), tmp.data(), o, h, wd, c, k);
  for (std::size_t i = 0; i < tmp.size(); ++i) dx[i] += tmp[i];
}

void conv2d_grad_weight(std::span<const double> x, std::span<const double> dy,
                        std::span<double> dw, std::size_t c, std::size_t h, std::size_t wd,
                        std::size_t o, std::size_t k) {
  const Padded xp = pad_planes(x.data(), c, h, wd, k / 2);
  const std::size_t kk = k * k;
  const std::size_t full = wd / kLane * kLane;
#pragma omp parallel for schedule(static) if (o * c * h * wd * k * k > kParallelThreshold)
  for (std::ptrdiff_t it = 0; it < static_cast<std::ptrdiff_t>(o * c); ++it) {
    const std::size_t oc = static_cast<std::size_t>(it) / c;
    const std::size_t ic = static_cast<std::size_t>(it) % c;
    const double* gplane = dy.data() + oc * h * wd;
    std::vector<double> acc(kk * kLane, 0.0);
    std::vector<double> tail(kk, 0.0);
    for (std::size_t row = 0; row < h; ++row) {
      const double* g = gplane + row * wd;
      for (std::size_t ky = 0; ky < k; ++ky) {
        const double* src = xp.data.data() + (ic * xp.rows + row + ky) * xp.stride;
        for (std::size_t kx = 0; kx < k; ++kx) {
          double* a = acc.data() + (ky * k + kx) * kLane;
          for (std::size_t col0 = 0; col0 < full; col0 += kLane) {
#pragma omp simd
            for (std::size_t j = 0; j < kLane; ++j) a[j] += g[col0 + j] * src[col0 + kx + j];
          }
          for (std::size_t col = full; col < wd; ++col) tail[ky * k + kx] += g[col] * src[col + kx];
        }
      }
    }
    double* out = dw.data() + (oc * c + ic) * kk;
    for (std::size_t t = 0; t < kk; ++t) {
      double s = tail[t];
      for (std::size_t j = 0; j < kLane; ++j) s += acc[t * kLane + j];
      out[t] += s;
    }
  }
}

namespace {

struct Tap {
  std::size_t i0, i1;
  double frac;
};

std::vector<Tap> resize_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t j = 0; j < out; ++j) {
    const double f = std::clamp((static_cast<double>(j) + 0.5) * scale - 0.5, 0.0,
                                static_cast<double>(in - 1));
    const auto i0 = static_cast<std::size_t>(f);
    taps[j] = {i0, std::min(i0 + 1, in - 1), f - static_cast<double>(i0)};
  }
  return taps;
}

}  // namespace

void resize_bilinear(std::span<const double> x, std::span<double> y, std::size_t c,
                     std::size_t h, std::size_t w, std::size_t oh, std::size_t ow) {
  const auto ty = resize_taps(h, oh);
  const auto tx = resize_taps(w, ow);
#pragma omp parallel for schedule(static) if (c * oh * ow > kParallelThreshold)
  for (std::ptrdiff_t cc = 0; cc < static_cast<std::ptrdiff_t>(c); ++cc) {
    const auto ch = static_cast<std::size_t>(cc);
    const double* p = x.data() + ch * h * w;
    double* q = y.data() + ch * oh * ow;
    for (std::size_t i = 0; i < oh; ++i) {
      const auto& a = ty[i];
      for (std::size_t j = 0; j < ow; ++j) {
        const auto& b = tx[j];
        q[i * ow + j] =
            (1 - a.frac) * ((1 - b.frac) * p[a.i0 * w + b.i0] + b.frac * p[a.i0 * w + b.i1]) +
            a.frac * ((1 - b.frac) * p[a.i1 * w + b.i0] + b.frac * p[a.i1 * w + b.i1]);
      }
    }
  }
}

void resize_bilinear_adjoint(std::span<const double> dy, std::span<double> dx, std::size_t c,
                             std::size_t h, std::size_t w, std::size_t oh, std::size_t ow) {
  const auto ty = resize_taps(h, oh);
  const auto tx = resize_taps(w, ow);
#pragma omp parallel for schedule(static) if (c * oh * ow > kParallelThreshold)
  for (std::ptrdiff_t cc = 0; cc < static_cast<std::ptrdiff_t>(c); ++cc) {
    const auto ch = static_cast<std::size_t>(cc);
    double* p = dx.data() + ch * h * w;
    const double* q = dy.data() + ch * oh * ow;
    for (std::size_t i = 0; i < oh; ++i) {
      const auto& a = ty[i];
      for (std::size_t j = 0; j < ow; ++j) {
        const auto& b = tx[j];
        const double g = q[i * ow + j];
        p[a.i0 * w + b.i0] += g * (1 - a.frac) * (1 - b.frac);
        p[a.i0 * w + b.i1] += g * (1 - a.frac) * b.frac;
        p[a.i1 * w + b.i0] += g * a.frac * (1 - b.frac);
        p[a.i1 * w + b.i1] += g * a.frac * b.frac;
      }
    }
  }
}

void sample_triplanes(const PlaneView& planes, std::span<const double> coords,
                      std::span<double> out) {
  const std::size_t n = coords.size() / 3;
  const std::size_t m = planes.channels;
#pragma omp parallel for schedule(static) if (n * m > kParallelThreshold)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    triplane_point_sample(planes, coords.data() + 3 * i, out.data() + i * m);
  }
}

void sample_triplanes_adjoint(const PlaneView& planes, std::span<const double> coords,
                              std::span<const double> dout, std::span<double> dplanes) {
  const std::size_t n = coords.size() / 3;
  const std::size_t m = planes.channels;
  const std::size_t chunks = std::min<std::size_t>(kReductionChunks, std::max<std::size_t>(n, 1));
  const std::size_t per = (n + chunks - 1) / chunks;
  std::vector<double> partial(chunks * dplanes.size(), 0.0);
#pragma omp parallel for schedule(static) if (n * m > kParallelThreshold)
  for (std::ptrdiff_t cc = 0; cc < static_cast<std::ptrdiff_t>(chunks); ++cc) {
    const auto ci = static_cast<std::size_t>(cc);
    double* acc = partial.data() + ci * dplanes.size();
    const std::size_t end = std::min(n, (ci + 1) * per);
    for (std::size_t i = ci * per; i < end; ++i)
      triplane_point_scatter(planes, coords.data() + 3 * i, dout.data() + i * m, acc);
  }
  for (std::size_t ci = 0; ci < chunks; ++ci) {
    const double* src = partial.data() + ci * dplanes.size();
    for (std::size_t idx = 0; idx < dplanes.size(); ++idx) dplanes[idx] += src[idx];
  }
}

}  // namespace adapter3d::kernels
