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

// Differentiable operations on ad::Var. Shapes are checked eagerly and a
// ConfigError names the offending op.

#ifndef ADAPTER3D_OPS_HPP
#define ADAPTER3D_OPS_HPP

#include <vector>

#include "adapter3d/autograd.hpp"
#include "adapter3d/kernels.hpp"

namespace adapter3d::ad {

// Elementwise, identical shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double value);
Var square(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var softplus(const Var& a);

// Reductions to a scalar.
Var sum(const Var& a);
Var mean(const Var& a);
Var dot(const Var& a, const Var& b);
Var l2_norm(const Var& a);            // zero vector has zero subgradient
Var maximum(const Var& a, const Var& b);  // scalars; ties pick `a`
Var divide(const Var& a, const Var& b);   // scalars

// Shape manipulation.
Var reshape(const Var& a, Shape shape);
Var concat(const std::vector<Var>& parts);              // along dim 0
Var slice(const Var& a, std::size_t begin, std::size_t end);  // along dim 0
Var transpose(const Var& a);                            // 2-D
/// out[i] = a[index[i]]; the adjoint scatter-adds.
Var gather(const Var& a, std::vector<std::size_t> index, Shape shape);

// Linear algebra.
Var matmul(const Var& a, const Var& b);            // [n,k] x [k,m]
Var add_row_bias(const Var& a, const Var& bias);   // [n,m] + [m]
Var add_channel_bias(const Var& a, const Var& bias);  // [C,H,W] + [C]
Var normalize(const Var& a);       // whole tensor to unit L2 norm; zero -> DegenerateError
Var normalize_rows(const Var& a);  // [n,d], each row unit norm; zero row -> DegenerateError

// Row-wise / column-wise minima of [n,m]; ties resolve to the lowest index.
Var min_over_cols(const Var& a);  // -> [n]
Var min_over_rows(const Var& a);  // -> [m]
// Mean of the min(t, size) smallest entries of a 1-D tensor; ties keep lower indices.
Var mean_of_smallest(const Var& a, std::size_t t);
Var mean_rows(const Var& a);      // [n,d] -> [d]

// Image ops on [C,H,W].
Var conv2d(const Var& x, const Var& weight);  // weight [O,C,K,K]
// weight [O,C,K,K] scaled per input channel by style [C]; optional per-output
// demodulation to unit L2 norm (plus eps 1e-8 inside the root).
Var modulate(const Var& weight, const Var& style, bool demodulate);
Var resize_bilinear(const Var& x, std::size_t out_h, std::size_t out_w);

// [3*M, R, R] channel-major -> [3, R, R, M] tri-plane layout.
Var channels_to_triplanes(const Var& x, std::size_t plane_channels);
// planes [3,R,R,M], coords [N,3] (constant) -> [N,M]
Var sample_triplanes(const Var& planes, const Var& coords);

struct RenderRays {
  std::vector<double> origins;
  std::vector<double> directions;
  std::vector<double> jitter;  // empty: bin midpoints
  std::size_t count = 0;
  double t_near = 2.0;
  double t_far = 4.0;
  std::size_t n_samples = 48;
};

// Fused tri-plane render. Returns [(C+2), N]: C color channels, depth, weight sum.
// Decoder: hidden = softplus(f w0 + b0); out = hidden w1 + b1, last column density.
Var render_triplanes(const Var& planes, const Var& w0, const Var& b0, const Var& w1,
                     const Var& b1, const RenderRays& rays);

}  // namespace adapter3d::ad

#endif  // ADAPTER3D_OPS_HPP
