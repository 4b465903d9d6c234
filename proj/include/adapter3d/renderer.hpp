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

// Ray generation and volume-rendering quadrature over tri-plane fields.

#ifndef ADAPTER3D_RENDERER_HPP
#define ADAPTER3D_RENDERER_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "adapter3d/autograd.hpp"
#include "adapter3d/camera.hpp"

namespace adapter3d {

/// Three axis-aligned feature planes, stored [3, R, R, M]: plane 0 is XY,
/// 1 is XZ, 2 is YZ; within a plane the first in-plane axis indexes columns.
struct TriPlanes {
  ad::Var planes;

  std::size_t resolution() const { return planes.dim(1); }
  std::size_t channels() const { return planes.dim(3); }
  /// Splits a [3M, R, R] feature map channel-wise into the three planes.
  static TriPlanes from_channels(const ad::Var& feature_map, std::size_t plane_channels);
};

struct PointSample {
  std::vector<double> feature;
  std::vector<double> color_feature;
  double density = 0.0;
};

/// Tri-plane decoder weights: one softplus hidden layer, then a linear head
/// whose last output is the density pre-activation (softplus-activated).
struct TriplaneDecoder {
  ad::Var w0, b0, w1, b1;

  std::size_t hidden() const { return w0.dim(1); }
  std::size_t color_channels() const { return w1.dim(1) - 1; }
  PointSample decode(std::span<const double> feature) const;
};

struct Ray {
  Vec3 origin{};
  Vec3 direction{};
  double t_near = 2.0;
  double t_far = 4.0;
};

struct RenderConfig {
  std::size_t n_samples = 48;
  double t_near = 2.0;
  double t_far = 4.0;
  bool stratified = false;
  std::uint64_t jitter_seed = 0;

  static RenderConfig training() { return {}; }
  static RenderConfig evaluation() { return {128, 2.0, 4.0, false, 0}; }
  void validate() const;
};

/// Feature image [C, R, R] (C = 32 at the default size).
struct FeatureImage {
  ad::Var values;
  std::size_t channels() const { return values.dim(0); }
  std::size_t resolution() const { return values.dim(1); }
};

/// Expected termination depth [R, R], world units.
struct DepthMap {
  ad::Var values;
};

struct RenderedImage {
  FeatureImage features;
  DepthMap depth;
  ad::Var weight_sum;  // [R, R]
};

struct RayResult {
  std::vector<double> feature;
  double depth = 0.0;
  double weight_sum = 0.0;
};

/// One ray per pixel center, row-major, unit directions.
std::vector<Ray> generate_rays(const CameraPose& pose, std::size_t resolution,
                               const RenderConfig& cfg = {});

/// Any position -> (color feature, density) function; used by the reference
/// quadrature so analytic media can be rendered.
using RadianceField = std::function<PointSample(const Vec3& position)>;

/// Reference midpoint quadrature with explicit alpha / transmittance terms.
RayResult render_ray(const RadianceField& field, const Ray& ray, const RenderConfig& cfg);
/// Reference path for a tri-plane scene: sample planes, decode, composite.
RayResult render_ray(const TriplaneDecoder& decoder, const TriPlanes& planes, const Ray& ray,
                     const RenderConfig& cfg);

/// Differentiable full-image render through the fused kernel.
RenderedImage render_image(const TriplaneDecoder& decoder, const TriPlanes& planes,
                           const CameraPose& pose, const RenderConfig& cfg,
                           std::size_t resolution);

/// Bilinear tri-plane lookup with clamping to [-1,1]^3.
std::vector<double> sample_triplanes(const TriPlanes& planes, const Vec3& position);

}  // namespace adapter3d

#endif  // ADAPTER3D_RENDERER_HPP
