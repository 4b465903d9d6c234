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

// Fused tri-plane ray marching.
//
// Colors are a linear function of the hidden layer, so the composited color
// equals W1c^T (sum_i w_i h_i) + b1c * sum_i w_i. The kernel accumulates the
// weighted hidden vector per ray and applies the color head once, instead of
// decoding a 32-channel color at every sample. This translation unit may be
// built with vector math enabled; NaN screening happens in the caller.

#include <algorithm>
#include <cmath>
#include <vector>

#include "adapter3d/kernels.hpp"
#include "parallel.hpp"

namespace adapter3d::kernels {

namespace {

constexpr std::size_t kRayBlock = 32;
constexpr std::size_t kHiddenLane = 16;

// log1p(u) for u in [0, 1] via log(1+u) = 2 atanh(s). Above sqrt(2)-1 the
// argument is halved first, which keeps |s| <= 0.1716 and the odd series
// below accurate to a few ulp.
inline double log1p_unit(double u) {
  const bool hi = u > 0.41421356237309503;
  const double s = hi ? (u - 1.0) / (u + 3.0) : u / (2.0 + u);
  const double s2 = s * s;
  double p = 1.0 / 21;
  p = p * s2 + 1.0 / 19;
  p = p * s2 + 1.0 / 17;
  p = p * s2 + 1.0 / 15;
  p = p * s2 + 1.0 / 13;
  p = p * s2 + 1.0 / 11;
  p = p * s2 + 1.0 / 9;
  p = p * s2 + 1.0 / 7;
  p = p * s2 + 1.0 / 5;
  p = p * s2 + 1.0 / 3;
  p = p * s2 + 1.0;
  return (hi ? 0.69314718055994531 : 0.0) + 2.0 * s * p;
}

// h = softplus(x), gate = sigmoid(x) = d softplus / dx.
void softplus_with_gate(const double* pre, double* h, double* gate, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) {
    const double x = pre[i];
    const double e = std::exp(-std::fabs(x));
    h[i] = std::fmax(x, 0.0) + log1p_unit(e);
    const double inv = 1.0 / (1.0 + e);
    gate[i] = x >= 0.0 ? inv : e * inv;
  }
}

void softplus_in_place(double* x, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) x[i] = std::fmax(x[i], 0.0) + log1p_unit(std::exp(-std::fabs(x[i])));
}

// The hidden gate is recovered from the activation: sigmoid(x) = 1 - exp(-softplus(x)).
void gate_from_softplus(const double* h, double* gate, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) gate[i] = -std::expm1(-h[i]);
}

struct RayScratch {
  std::vector<double> features, hidden, density_gate, weights, trans_after, aggregate, color;
  RayScratch(std::size_t samples, const DecoderView& dec)
      : features(samples * dec.in),
        hidden(samples * dec.hidden),
        density_gate(samples),
        weights(samples),
        trans_after(samples),
        aggregate(dec.hidden),
        color(dec.color_channels()) {}
};

struct RayBuffers {
  double* features;
  double* hidden;
  double* density_gate;
  double* weights;
  double* trans_after;
  double* aggregate;
  double* color;
};

inline double sample_depth(const SampleSpec& spec, std::size_t ray, std::size_t s, double delta) {
  const double jit = spec.jitter.empty() ? 0.5 : spec.jitter[ray * spec.n_samples + s];
  return spec.t_near + (static_cast<double>(s) + jit) * delta;
}

void forward_ray(const PlaneView& planes, const DecoderView& dec, const RaySet& rays,
                 const SampleSpec& spec, const double* density_col, std::size_t r,
                 const RayBuffers& buf, std::span<double> out) {
  const std::size_t S = spec.n_samples;
  const std::size_t Hd = dec.hidden;
  const std::size_t In = dec.in;
  const std::size_t C = dec.color_channels();
  const std::size_t N = rays.count;
  const double delta = (spec.t_far - spec.t_near) / static_cast<double>(S);
  const double* o = rays.origins.data() + 3 * r;
  const double* d = rays.directions.data() + 3 * r;

  for (std::size_t s = 0; s < S; ++s) {
    const double t = sample_depth(spec, r, s, delta);
    const double p[3] = {o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]};
    triplane_point_sample(planes, p, buf.features + s * In);
  }
  // Hidden pre-activations are written into `hidden`, then activated in place.
  const std::size_t full = Hd / kHiddenLane * kHiddenLane;
  for (std::size_t h0 = 0; h0 < full; h0 += kHiddenLane) {
    for (std::size_t s = 0; s < S; ++s) {
      double acc[kHiddenLane];
      for (std::size_t j = 0; j < kHiddenLane; ++j) acc[j] = dec.b0[h0 + j];
      const double* f = buf.features + s * In;
      for (std::size_t i = 0; i < In; ++i) {
        const double* wrow = dec.w0.data() + i * Hd + h0;
#pragma omp simd
        for (std::size_t j = 0; j < kHiddenLane; ++j) acc[j] += f[i] * wrow[j];
      }
      std::copy_n(acc, kHiddenLane, buf.hidden + s * Hd + h0);
    }
  }
  for (std::size_t s = 0; s < S && full < Hd; ++s) {
    double* pre = buf.hidden + s * Hd;
    for (std::size_t h = full; h < Hd; ++h) {
      double v = dec.b0[h];
      for (std::size_t i = 0; i < In; ++i) v += buf.features[s * In + i] * dec.w0[i * Hd + h];
      pre[h] = v;
    }
  }
  softplus_in_place(buf.hidden, S * Hd);

  std::fill(buf.aggregate, buf.aggregate + Hd, 0.0);
  double transmittance = 1.0;
  double depth = 0.0;
  double weight_sum = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    const double* h = buf.hidden + s * Hd;
    double pre = dec.b1[C];
#pragma omp simd reduction(+ : pre)
    for (std::size_t k = 0; k < Hd; ++k) pre += h[k] * density_col[k];
    double sigma, gate;
    softplus_with_gate(&pre, &sigma, &gate, 1);
    buf.density_gate[s] = gate;
    const double alpha = -std::expm1(-sigma * delta);
    const double w = transmittance * alpha;
    transmittance *= 1.0 - alpha;
    buf.weights[s] = w;
    buf.trans_after[s] = transmittance;
#pragma omp simd
    for (std::size_t k = 0; k < Hd; ++k) buf.aggregate[k] += w * h[k];
    depth += w * sample_depth(spec, r, s, delta);
    weight_sum += w;
  }
  depth += (1.0 - weight_sum) * spec.t_far;

  double* color = buf.color;
  for (std::size_t c = 0; c < C; ++c) color[c] = weight_sum * dec.b1[c];
  for (std::size_t k = 0; k < Hd; ++k) {
    const double a = buf.aggregate[k];
    const double* wrow = dec.w1.data() + k * dec.out;
#pragma omp simd
    for (std::size_t c = 0; c < C; ++c) color[c] += a * wrow[c];
  }
  for (std::size_t c = 0; c < C; ++c) out[c * N + r] = color[c];
  out[C * N + r] = depth;
  out[(C + 1) * N + r] = weight_sum;
}

std::vector<double> density_column(const DecoderView& dec) {
  std::vector<double> col(dec.hidden);
  for (std::size_t k = 0; k < dec.hidden; ++k) col[k] = dec.w1[k * dec.out + dec.color_channels()];
  return col;
}

}  // namespace

std::size_t render_output_channels(const DecoderView& dec) { return dec.color_channels() + 2; }

void render_rays(const PlaneView& planes, const DecoderView& dec, const RaySet& rays,
                 const SampleSpec& spec, std::span<double> out, RenderTape* tape) {
  const std::size_t N = rays.count;
  const std::size_t S = spec.n_samples;
  const std::size_t Hd = dec.hidden;
  if (tape) {
    tape->features.resize(N * S * dec.in);
    tape->hidden.resize(N * S * Hd);
    tape->density_gate.resize(N * S);
    tape->weights.resize(N * S);
    tape->trans_after.resize(N * S);
    tape->aggregate.resize(N * Hd);
  }
  const auto density_col = density_column(dec);
  const std::size_t blocks = (N + kRayBlock - 1) / kRayBlock;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t bb = 0; bb < static_cast<std::ptrdiff_t>(blocks); ++bb) {
    const auto b = static_cast<std::size_t>(bb);
    RayScratch scratch(tape ? 0 : S, dec);
    const std::size_t end = std::min(N, (b + 1) * kRayBlock);
    for (std::size_t r = b * kRayBlock; r < end; ++r) {
      RayBuffers buf;
      if (tape) {
        buf = {tape->features.data() + r * S * dec.in, tape->hidden.data() + r * S * Hd,
               tape->density_gate.data() + r * S,
               tape->weights.data() + r * S,      tape->trans_after.data() + r * S,
               tape->aggregate.data() + r * Hd, scratch.color.data()};
      } else {
        buf = {scratch.features.data(),     scratch.hidden.data(),
               scratch.density_gate.data(), scratch.weights.data(), scratch.trans_after.data(),
               scratch.aggregate.data(), scratch.color.data()};
      }
      forward_ray(planes, dec, rays, spec, density_col.data(), r, buf, out);
    }
  }
}

void render_rays_backward(const PlaneView& planes, const DecoderView& dec, const RaySet& rays,
                          const SampleSpec& spec, const RenderTape& tape,
                          std::span<const double> dout, std::span<double> dplanes,
                          const DecoderGrads& grads) {
  const std::size_t N = rays.count;
  const std::size_t S = spec.n_samples;
  const std::size_t Hd = dec.hidden;
  const std::size_t In = dec.in;
  const std::size_t C = dec.color_channels();
  const std::size_t Out = dec.out;
  const double delta = (spec.t_far - spec.t_near) / static_cast<double>(S);
  const bool want_decoder = !grads.w0.empty();
  const bool want_planes = !dplanes.empty();

  // Partial-sum layout per block: [w0 | b0 | w1 | b1 | planes].
  const std::size_t off_b0 = In * Hd;
  const std::size_t off_w1 = off_b0 + Hd;
  const std::size_t off_b1 = off_w1 + Hd * Out;
  const std::size_t off_planes = off_b1 + Out;
  const std::size_t stride = off_planes + (want_planes ? dplanes.size() : 0);
  const std::size_t blocks = (N + kRayBlock - 1) / kRayBlock;
  std::vector<double> partial(blocks * stride, 0.0);
  const auto density_col = density_column(dec);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t bb = 0; bb < static_cast<std::ptrdiff_t>(blocks); ++bb) {
    const auto b = static_cast<std::size_t>(bb);
    double* acc = partial.data() + b * stride;
    std::vector<double> u(Hd), dpre(Hd), dfeat(In), suffix_e(S), gate(S * Hd);
    const std::size_t end = std::min(N, (b + 1) * kRayBlock);
    for (std::size_t r = b * kRayBlock; r < end; ++r) {
      const double* hidden = tape.hidden.data() + r * S * Hd;
      gate_from_softplus(hidden, gate.data(), S * Hd);
      const double* feats = tape.features.data() + r * S * In;
      const double* weights = tape.weights.data() + r * S;
      const double* trans_after = tape.trans_after.data() + r * S;
      const double* density_gate = tape.density_gate.data() + r * S;
      const double* aggregate = tape.aggregate.data() + r * Hd;
      const double g_depth = dout[C * N + r];
      const double g_wsum = dout[(C + 1) * N + r];

      double weight_sum = 0.0;
      for (std::size_t s = 0; s < S; ++s) weight_sum += weights[s];

      // Color head: out_c = sum_k aggregate_k W1[k,c] + weight_sum b1[c].
      double bias_dot = 0.0;
      for (std::size_t k = 0; k < Hd; ++k) u[k] = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        const double g = dout[c * N + r];
        bias_dot += g * dec.b1[c];
        if (want_decoder) acc[off_b1 + c] += weight_sum * g;
      }
      for (std::size_t k = 0; k < Hd; ++k) {
        const double* wrow = dec.w1.data() + k * Out;
        double uk = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          const double g = dout[c * N + r];
          uk += wrow[c] * g;
          if (want_decoder) acc[off_w1 + k * Out + c] += aggregate[k] * g;
        }
        u[k] = uk;
      }

      // e_s: derivative of the ray outputs w.r.t. the weight of bin s.
      for (std::size_t s = 0; s < S; ++s) {
        const double* h = hidden + s * Hd;
        double e = bias_dot + g_wsum + g_depth * (sample_depth(spec, r, s, delta) - spec.t_far);
        for (std::size_t k = 0; k < Hd; ++k) e += u[k] * h[k];
        suffix_e[s] = e;
      }
      // dL/dsigma_s = delta (e_s T_{s+1} - sum_{k>s} w_k e_k)
      double tail = 0.0;
      for (std::size_t si = S; si-- > 0;) {
        const double e = suffix_e[si];
        const double dsigma = delta * (e * trans_after[si] - tail);
        tail += weights[si] * e;
        const double dsig_pre = dsigma * density_gate[si];
        const double w = weights[si];
        const double* h = hidden + si * Hd;
        const double* g = gate.data() + si * Hd;
        if (want_decoder) {
          acc[off_b1 + C] += dsig_pre;
          for (std::size_t k = 0; k < Hd; ++k) acc[off_w1 + k * Out + C] += h[k] * dsig_pre;
        }
#pragma omp simd
        for (std::size_t k = 0; k < Hd; ++k) dpre[k] = (w * u[k] + dsig_pre * density_col[k]) * g[k];
        const double* f = feats + si * In;
        if (want_decoder) {
          for (std::size_t k = 0; k < Hd; ++k) acc[off_b0 + k] += dpre[k];
          for (std::size_t i = 0; i < In; ++i) {
            double* dst = acc + i * Hd;
            const double fi = f[i];
#pragma omp simd
            for (std::size_t k = 0; k < Hd; ++k) dst[k] += fi * dpre[k];
          }
        }
        if (want_planes) {
          for (std::size_t i = 0; i < In; ++i) {
            const double* wrow = dec.w0.data() + i * Hd;
            double v = 0.0;
            for (std::size_t k = 0; k < Hd; ++k) v += wrow[k] * dpre[k];
            dfeat[i] = v;
          }
          const double t = sample_depth(spec, r, si, delta);
          const double* o = rays.origins.data() + 3 * r;
          const double* d = rays.directions.data() + 3 * r;
          const double p[3] = {o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]};
          triplane_point_scatter(planes, p, dfeat.data(), acc + off_planes);
        }
      }
    }
  }

  for (std::size_t b = 0; b < blocks; ++b) {
    const double* src = partial.data() + b * stride;
    if (want_decoder) {
      for (std::size_t i = 0; i < In * Hd; ++i) grads.w0[i] += src[i];
      for (std::size_t i = 0; i < Hd; ++i) grads.b0[i] += src[off_b0 + i];
      for (std::size_t i = 0; i < Hd * Out; ++i) grads.w1[i] += src[off_w1 + i];
      for (std::size_t i = 0; i < Out; ++i) grads.b1[i] += src[off_b1 + i];
    }
    if (want_planes) {
      for (std::size_t i = 0; i < dplanes.size(); ++i) dplanes[i] += src[off_planes + i];
    }
  }
}

}  // namespace adapter3d::kernels
