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

// Serial kernels. Straight loops, no blocking, no fusion.

#include <algorithm>
#include <cmath>

#include "adapter3d/kernels.hpp"

namespace adapter3d::kernels::reference {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * m + j];
      c[i * m + j] = acc;
    }
  }
}

void matmul_grad_a(std::span<const double> dc, std::span<const double> b, std::span<double> da,
                   std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += dc[i * m + j] * b[p * m + j];
      da[i * k + p] += acc;
    }
  }
}

void matmul_grad_b(std::span<const double> a, std::span<const double> dc, std::span<double> db,
                   std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += a[i * k + p] * dc[i * m + j];
      db[p * m + j] += acc;
    }
  }
}

void conv2d(std::span<const double> x, std::span<const double> w, std::span<double> y,
            std::size_t c, std::size_t h, std::size_t wd, std::size_t o, std::size_t k) {
  const long pad = static_cast<long>(k / 2);
  for (std::size_t oc = 0; oc < o; ++oc) {
    for (std::size_t row = 0; row < h; ++row) {
      for (std::size_t col = 0; col < wd; ++col) {
        double acc = 0.0;
        for (std::size_t ic = 0; ic < c; ++ic) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            const long sy = static_cast<long>(row) + static_cast<long>(ky) - pad;
            if (sy < 0 || sy >= static_cast<long>(h)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long sx = static_cast<long>(col) + static_cast<long>(kx) - pad;
              if (sx < 0 || sx >= static_cast<long>(wd)) continue;
              acc += w[((oc * c + ic) * k + ky) * k + kx] *
                     x[(ic * h + static_cast<std::size_t>(sy)) * wd + static_cast<std::size_t>(sx)];
            }
          }
        }
        y[(oc * h + row) * wd + col] = acc;
      }
    }
  }
}

void conv2d_grad_input(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                       std::size_t c, std::size_t h, std::size_t wd, std::size_t o, std::size_t k) {
  const long pad = static_cast<long>(k / 2);
  for (std::size_t oc = 0; oc < o; ++oc)
    for (std::size_t row = 0; row < h; ++row)
      for (std::size_t col = 0; col < wd; ++col) {
        const double g = dy[(oc * h + row) * wd + col];
        for (std::size_t ic = 0; ic < c; ++ic)
          for (std::size_t ky = 0; ky < k; ++ky) {
            const long sy = static_cast<long>(row) + static_cast<long>(ky) - pad;
            if (sy < 0 || sy >= static_cast<long>(h)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long sx = static_cast<long>(col) + static_cast<long>(kx) - pad;
              if (sx < 0 || sx >= static_cast<long>(wd)) continue;
              dx[(ic * h + static_cast<std::size_t>(sy)) * wd + static_cast<std::size_t>(sx)] +=
                  g * w[((oc * c + ic) * k + ky) * k + kx];
            }
          }
      }
}

void conv2d_grad_weight(std::span<const double> x, std::span<const double> dy,
                        std::span<double> dw, std::size_t c, std::size_t h, std::size_t wd,
                        std::size_t o, std::size_t k) {
  const long pad = static_cast<long>(k / 2);
  for (std::size_t oc = 0; oc < o; ++oc)
    for (std::size_t ic = 0; ic < c; ++ic)
      for (std::size_t ky = 0; ky < k; ++ky)
        for (std::size_t kx = 0; kx < k; ++kx) {
          double acc = 0.0;
          for (std::size_t row = 0; row < h; ++row) {
            const long sy = static_cast<long>(row) + static_cast<long>(ky) - pad;
            if (sy < 0 || sy >= static_cast<long>(h)) continue;
            for (std::size_t col = 0; col < wd; ++col) {
              const long sx = static_cast<long>(col) + static_cast<long>(kx) - pad;
              if (sx < 0 || sx >= static_cast<long>(wd)) continue;
              acc += dy[(oc * h + row) * wd + col] *
                     x[(ic * h + static_cast<std::size_t>(sy)) * wd + static_cast<std::size_t>(sx)];
            }
          }
          dw[((oc * c + ic) * k + ky) * k + kx] += acc;
        }
}

void resize_bilinear(std::span<const double> x, std::span<double> y, std::size_t c,
                     std::size_t h, std::size_t w, std::size_t oh, std::size_t ow) {
  const double sy = static_cast<double>(h) / static_cast<double>(oh);
  const double sx = static_cast<double>(w) / static_cast<double>(ow);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < oh; ++i) {
      const double fy = std::clamp((static_cast<double>(i) + 0.5) * sy - 0.5, 0.0,
                                   static_cast<double>(h - 1));
      const auto y0 = static_cast<std::size_t>(fy);
      const auto y1 = std::min(y0 + 1, h - 1);
      const double ay = fy - static_cast<double>(y0);
      for (std::size_t j = 0; j < ow; ++j) {
        const double fx = std::clamp((static_cast<double>(j) + 0.5) * sx - 0.5, 0.0,
                                     static_cast<double>(w - 1));
        const auto x0 = static_cast<std::size_t>(fx);
        const auto x1 = std::min(x0 + 1, w - 1);
        const double ax = fx - static_cast<double>(x0);
        const double* p = x.data() + ch * h * w;
        y[(ch * oh + i) * ow + j] = (1 - ay) * ((1 - ax) * p[y0 * w + x0] + ax * p[y0 * w + x1]) +
                                    ay * ((1 - ax) * p[y1 * w + x0] + ax * p[y1 * w + x1]);
      }
    }
}

namespace {

void sample_plane(const PlaneView& planes, std::size_t plane, double u, double v, double* acc) {
  const std::size_t r = planes.resolution;
  const std::size_t m = planes.channels;
  const double pc = plane_coordinate(u, r);
  const double pr = plane_coordinate(v, r);
  const auto c0 = static_cast<std::size_t>(pc);
  const auto r0 = static_cast<std::size_t>(pr);
  const auto c1 = std::min(c0 + 1, r - 1);
  const auto r1 = std::min(r0 + 1, r - 1);
  const double fc = pc - static_cast<double>(c0);
  const double fr = pr - static_cast<double>(r0);
  const double* base = planes.data.data() + plane * r * r * m;
  for (std::size_t ch = 0; ch < m; ++ch) {
    const double top = (1 - fc) * base[(r0 * r + c0) * m + ch] + fc * base[(r0 * r + c1) * m + ch];
    const double bot = (1 - fc) * base[(r1 * r + c0) * m + ch] + fc * base[(r1 * r + c1) * m + ch];
    acc[ch] += (1 - fr) * top + fr * bot;
  }
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

}  // namespace

void sample_triplanes(const PlaneView& planes, std::span<const double> coords,
                      std::span<double> out) {
  const std::size_t m = planes.channels;
  const std::size_t n = coords.size() / 3;
  for (std::size_t i = 0; i < n; ++i) {
    double* acc = out.data() + i * m;
    std::fill(acc, acc + m, 0.0);
    const double x = std::clamp(coords[i * 3 + 0], -1.0, 1.0);
    const double y = std::clamp(coords[i * 3 + 1], -1.0, 1.0);
    const double z = std::clamp(coords[i * 3 + 2], -1.0, 1.0);
    sample_plane(planes, 0, x, y, acc);
    sample_plane(planes, 1, x, z, acc);
    sample_plane(planes, 2, y, z, acc);
  }
}

void render_rays(const PlaneView& planes, const DecoderView& dec, const RaySet& rays,
                 const SampleSpec& spec, std::span<double> out) {
  const std::size_t n = rays.count;
  const std::size_t s_count = spec.n_samples;
  const std::size_t color = dec.color_channels();
  const double delta = (spec.t_far - spec.t_near) / static_cast<double>(s_count);
  std::vector<double> point(3), feature(dec.in), hidden(dec.hidden), decoded(dec.out);
  std::vector<double> accum(color);
  for (std::size_t r = 0; r < n; ++r) {
    std::fill(accum.begin(), accum.end(), 0.0);
    double transmittance = 1.0;
    double depth = 0.0;
    double weight_sum = 0.0;
    for (std::size_t s = 0; s < s_count; ++s) {
      const double jit = spec.jitter.empty() ? 0.5 : spec.jitter[r * s_count + s];
      const double t = spec.t_near + (static_cast<double>(s) + jit) * delta;
      for (int a = 0; a < 3; ++a) point[a] = rays.origins[r * 3 + a] + t * rays.directions[r * 3 + a];
      reference::sample_triplanes(planes, point, feature);
      for (std::size_t h = 0; h < dec.hidden; ++h) {
        double acc = dec.b0[h];
        for (std::size_t i = 0; i < dec.in; ++i) acc += feature[i] * dec.w0[i * dec.hidden + h];
        hidden[h] = softplus(acc);
      }
      for (std::size_t o = 0; o < dec.out; ++o) {
        double acc = dec.b1[o];
        for (std::size_t h = 0; h < dec.hidden; ++h) acc += hidden[h] * dec.w1[h * dec.out + o];
        decoded[o] = acc;
      }
      const double sigma = softplus(decoded[color]);
      const double alpha = 1.0 - std::exp(-sigma * delta);
      const double weight = transmittance * alpha;
      transmittance *= 1.0 - alpha;
      for (std::size_t ch = 0; ch < color; ++ch) accum[ch] += weight * decoded[ch];
      depth += weight * t;
      weight_sum += weight;
    }
    depth += (1.0 - weight_sum) * spec.t_far;
    for (std::size_t ch = 0; ch < color; ++ch) out[ch * n + r] = accum[ch];
    out[color * n + r] = depth;
    out[(color + 1) * n + r] = weight_sum;
  }
}

}  // namespace adapter3d::kernels::reference
