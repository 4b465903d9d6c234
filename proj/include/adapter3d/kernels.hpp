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

// Dense numeric kernels behind the autograd ops.
//
// Every kernel exists twice: the OpenMP version in `adapter3d::kernels` is
// what the library runs; the plain loop in `adapter3d::kernels::reference`
// is kept as a test oracle and benchmark baseline. Parallel reductions use a
// fixed chunking that does not depend on the thread count, so results are
// bit-reproducible across OMP_NUM_THREADS settings.
//
// Layout conventions: matrices row-major, images channel-major [C,H,W],
// tri-planes [3,R,R,M] (plane, row, column, channel).

#ifndef ADAPTER3D_KERNELS_HPP
#define ADAPTER3D_KERNELS_HPP

#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace adapter3d::kernels {

struct PlaneView {
  std::span<const double> data;
  std::size_t resolution = 0;
  std::size_t channels = 0;
};

// Tri-plane decoder weights: hidden = softplus(x W0 + b0), out = hidden W1 + b1.
// The last output column is the density pre-activation; the rest are color.
struct DecoderView {
  std::span<const double> w0;  // [in, hidden]
  std::span<const double> b0;  // [hidden]
  std::span<const double> w1;  // [hidden, out]
  std::span<const double> b1;  // [out]
  std::size_t in = 0;
  std::size_t hidden = 0;
  std::size_t out = 0;
  std::size_t color_channels() const { return out - 1; }
};

struct DecoderGrads {
  std::span<double> w0, b0, w1, b1;  // empty span: not requested
};

struct RaySet {
  std::span<const double> origins;     // [N,3]
  std::span<const double> directions;  // [N,3]
  std::size_t count = 0;
};

struct SampleSpec {
  double t_near = 2.0;
  double t_far = 4.0;
  std::size_t n_samples = 48;
  // Per-ray, per-bin offsets in [0,1); empty means bin midpoints.
  std::span<const double> jitter;
};

// Allocator whose value-less construct() leaves doubles uninitialized.
template <class T>
struct UninitAllocator : std::allocator<T> {
  template <class U>
  struct rebind {
    using other = UninitAllocator<U>;
  };
  UninitAllocator() = default;
  template <class U>
  UninitAllocator(const UninitAllocator<U>&) noexcept {}
  template <class U>
  void construct(U* p) noexcept {
    ::new (static_cast<void*>(p)) U;
  }
  template <class U, class... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
};

using TapeBuffer = std::vector<double, UninitAllocator<double>>;

// Per-sample intermediates saved by the fused forward for its backward pass.
// Every entry is written by the forward before it is read.
struct RenderTape {
  TapeBuffer features;     // [N,S,in]
  TapeBuffer hidden;       // softplus activations, [N,S,hidden]
  TapeBuffer density_gate; // [N,S]
  TapeBuffer weights;      // [N,S]
  TapeBuffer trans_after;  // transmittance after each bin, [N,S]
  TapeBuffer aggregate;    // weighted hidden sum per ray, [N,hidden]
};

// Rendered outputs per ray, channel-major: color channels, then depth, then
// the weight sum. Shape [(color + 2), N].
std::size_t render_output_channels(const DecoderView& dec);

// Position of the bilinear sample along [-1,1] on an R-node axis (corners aligned).
inline double plane_coordinate(double u, std::size_t resolution) {
  double p = (u + 1.0) * 0.5 * static_cast<double>(resolution - 1);
  if (p < 0.0) p = 0.0;
  const double hi = static_cast<double>(resolution - 1);
  if (p > hi) p = hi;
  return p;
}

// C = A B with A [n,k], B [k,m].
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t n, std::size_t k, std::size_t m);
// dA += dC B^T
void matmul_grad_a(std::span<const double> dc, std::span<const double> b, std::span<double> da,
                   std::size_t n, std::size_t k, std::size_t m);
// dB += A^T dC
void matmul_grad_b(std::span<const double> a, std::span<const double> dc, std::span<double> db,
                   std::size_t n, std::size_t k, std::size_t m);

// Stride-1 "same" convolution, odd square kernel. x [C,H,W], w [O,C,K,K].
void conv2d(std::span<const double> x, std::span<const double> w, std::span<double> y,
            std::size_t c, std::size_t h, std::size_t wd, std::size_t o, std::size_t k);
void conv2d_grad_input(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                       std::size_t c, std::size_t h, std::size_t wd, std::size_t o, std::size_t k);
void conv2d_grad_weight(std::span<const double> x, std::span<const double> dy,
                        std::span<double> dw, std::size_t c, std::size_t h, std::size_t wd,
                        std::size_t o, std::size_t k);

// Half-pixel-centered bilinear resize with edge clamping, [C,H,W] -> [C,OH,OW].
void resize_bilinear(std::span<const double> x, std::span<double> y, std::size_t c,
                     std::size_t h, std::size_t w, std::size_t oh, std::size_t ow);
void resize_bilinear_adjoint(std::span<const double> dy, std::span<double> dx, std::size_t c,
                             std::size_t h, std::size_t w, std::size_t oh, std::size_t ow);

// Sum of the XY, XZ and YZ bilinear samples. coords [N,3], out [N,M].
void sample_triplanes(const PlaneView& planes, std::span<const double> coords,
                      std::span<double> out);
void sample_triplanes_adjoint(const PlaneView& planes, std::span<const double> coords,
                              std::span<const double> dout, std::span<double> dplanes);

// Fused sample -> decode -> composite. `tape` may be null for inference.
void render_rays(const PlaneView& planes, const DecoderView& dec, const RaySet& rays,
                 const SampleSpec& spec, std::span<double> out, RenderTape* tape);
// `dout` has the layout of `out`; empty `dplanes` skips the plane gradient.
void render_rays_backward(const PlaneView& planes, const DecoderView& dec, const RaySet& rays,
                          const SampleSpec& spec, const RenderTape& tape,
                          std::span<const double> dout, std::span<double> dplanes,
                          const DecoderGrads& grads);

namespace reference {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t n, std::size_t k, std::size_t m);
void matmul_grad_a(std::span<const double> dc, std::span<const double> b, std::span<double> da,
                   std::size_t n, std::size_t k, std::size_t m);
void matmul_grad_b(std::span<const double> a, std::span<const double> dc, std::span<double> db,
                   std::size_t n, std::size_t k, std::size_t m);
void conv2d(std::span<const double> x, std::span<const double> w, std::span<double> y,
            std::size_t c, std::size_t h, std::size_t wd, std::size_t o, std::size_t k);
void conv2d_grad_input(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                       std::size_t c, std::size_t h, std::size_t wd, std::size_t o, std::size_t k);
void conv2d_grad_weight(std::span<const double> x, std::span<const double> dy,
                        std::span<double> dw, std::size_t c, std::size_t h, std::size_t wd,
                        std::size_t o, std::size_t k);
void resize_bilinear(std::span<const double> x, std::span<double> y, std::size_t c,
                     std::size_t h, std::size_t w, std::size_t oh, std::size_t ow);
void sample_triplanes(const PlaneView& planes, std::span<const double> coords,
                      std::span<double> out);
// Unfused: decodes every sample's full color vector, then composites with
// the textbook alpha/transmittance recurrence.
void render_rays(const PlaneView& planes, const DecoderView& dec, const RaySet& rays,
                 const SampleSpec& spec, std::span<double> out);

}  // namespace reference

}  // namespace adapter3d::kernels

#endif  // ADAPTER3D_KERNELS_HPP
