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

#include "adapter3d/renderer.hpp"

#include <algorithm>
#include <cmath>

#include "adapter3d/errors.hpp"
#include "adapter3d/kernels.hpp"
#include "adapter3d/ops.hpp"

namespace adapter3d {

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

}  // namespace

TriPlanes TriPlanes::from_channels(const ad::Var& feature_map, std::size_t plane_channels) {
  return {ad::channels_to_triplanes(feature_map, plane_channels)};
}

PointSample TriplaneDecoder::decode(std::span<const double> feature) const {
  const std::size_t in = w0.dim(0), hid = w0.dim(1), out = w1.dim(1);
  if (feature.size() != in) throw ConfigError("decode_point: feature has wrong dimension");
  for (double f : feature)
    if (!std::isfinite(f)) throw NumericalError("decode_point: non-finite feature");
  std::vector<double> h(hid);
  for (std::size_t k = 0; k < hid; ++k) {
    double acc = b0[k];
    for (std::size_t i = 0; i < in; ++i) acc += feature[i] * w0[i * hid + k];
    h[k] = softplus(acc);
  }
  PointSample s;
  s.feature.assign(feature.begin(), feature.end());
  s.color_feature.resize(out - 1);
  for (std::size_t o = 0; o < out; ++o) {
    double acc = b1[o];
    for (std::size_t k = 0; k < hid; ++k) acc += h[k] * w1[k * out + o];
    if (o + 1 < out) {
      s.color_feature[o] = acc;
    } else {
      s.density = softplus(acc);
    }
  }
  return s;
}

void RenderConfig::validate() const {
  if (n_samples < 2) throw ConfigError("render: n_samples must be >= 2");
  if (!(t_near > 0.0 && t_near < t_far)) throw ConfigError("render: need 0 < t_near < t_far");
}

std::vector<Ray> generate_rays(const CameraPose& pose, std::size_t resolution,
                               const RenderConfig& cfg) {
  pose.validate();
  cfg.validate();
  if (resolution == 0) throw ConfigError("generate_rays: resolution must be positive");
  const auto& K = pose.intrinsics;
  const auto& E = pose.extrinsics;
  const Vec3 origin = pose.camera_center();
  std::vector<Ray> rays;
  rays.reserve(resolution * resolution);
  const double res = static_cast<double>(resolution);
  for (std::size_t i = 0; i < resolution; ++i) {
    for (std::size_t j = 0; j < resolution; ++j) {
      const double u = (static_cast<double>(j) + 0.5) / res;
      const double v = (static_cast<double>(i) + 0.5) / res;
      // Back-substitute K d = (u, v, 1).
      const double z = 1.0 / K[8];
      const double y = (v - K[5] * z) / K[4];
      const double x = (u - K[1] * y - K[2] * z) / K[0];
      Vec3 world{};
      for (int c = 0; c < 3; ++c) world[c] = E[0 * 4 + c] * x + E[1 * 4 + c] * y + E[2 * 4 + c] * z;
      const double n = std::sqrt(world[0] * world[0] + world[1] * world[1] + world[2] * world[2]);
      rays.push_back({origin, {world[0] / n, world[1] / n, world[2] / n}, cfg.t_near, cfg.t_far});
    }
  }
  return rays;
}

RayResult render_ray(const RadianceField& field, const Ray& ray, const RenderConfig& cfg) {
  if (cfg.n_samples < 2) throw ConfigError("render: n_samples must be >= 2");
  if (!(ray.t_near > 0.0 && ray.t_near < ray.t_far)) throw ConfigError("render: need 0 < t_near < t_far");
  const double delta = (ray.t_far - ray.t_near) / static_cast<double>(cfg.n_samples);
  RayResult result;
  double transmittance = 1.0;
  for (std::size_t s = 0; s < cfg.n_samples; ++s) {
    const double t = ray.t_near + (static_cast<double>(s) + 0.5) * delta;
    const Vec3 x{ray.origin[0] + t * ray.direction[0], ray.origin[1] + t * ray.direction[1],
                 ray.origin[2] + t * ray.direction[2]};
    const PointSample p = field(x);
    if (!std::isfinite(p.density)) throw NumericalError("render_ray: non-finite density");
    if (result.feature.empty()) result.feature.assign(p.color_feature.size(), 0.0);
    const double alpha = 1.0 - std::exp(-p.density * delta);
    const double weight = transmittance * alpha;
    transmittance *= 1.0 - alpha;
    for (std::size_t c = 0; c < p.color_feature.size(); ++c) {
      if (!std::isfinite(p.color_feature[c])) throw NumericalError("render_ray: non-finite color");
      result.feature[c] += weight * p.color_feature[c];
    }
    result.depth += weight * t;
    result.weight_sum += weight;
  }
  result.depth += (1.0 - result.weight_sum) * ray.t_far;
  return result;
}

std::vector<double> sample_triplanes(const TriPlanes& planes, const Vec3& position) {
  kernels::PlaneView view{planes.planes.value(), planes.resolution(), planes.channels()};
  std::vector<double> out(view.channels);
  kernels::reference::sample_triplanes(view, std::span<const double>(position.data(), 3), out);
  return out;
}

RayResult render_ray(const TriplaneDecoder& decoder, const TriPlanes& planes, const Ray& ray,
                     const RenderConfig& cfg) {
  return render_ray(
      [&](const Vec3& x) { return decoder.decode(sample_triplanes(planes, x)); }, ray, cfg);
}

RenderedImage render_image(const TriplaneDecoder& decoder, const TriPlanes& planes,
                           const CameraPose& pose, const RenderConfig& cfg,
                           std::size_t resolution) {
  const auto rays = generate_rays(pose, resolution, cfg);
  ad::RenderRays batch;
  batch.count = rays.size();
  batch.t_near = cfg.t_near;
  batch.t_far = cfg.t_far;
  batch.n_samples = cfg.n_samples;
  batch.origins.reserve(3 * rays.size());
  batch.directions.reserve(3 * rays.size());
  for (const auto& r : rays) {
    batch.origins.insert(batch.origins.end(), r.origin.begin(), r.origin.end());
    batch.directions.insert(batch.directions.end(), r.direction.begin(), r.direction.end());
  }
  if (cfg.stratified) {
    Rng rng(cfg.jitter_seed);
    batch.jitter.resize(rays.size() * cfg.n_samples);
    for (auto& j : batch.jitter) j = rng.uniform();
  }
  const ad::Var packed =
      ad::render_triplanes(planes.planes, decoder.w0, decoder.b0, decoder.w1, decoder.b1, batch);
  const std::size_t c = decoder.color_channels();
  RenderedImage out;
  out.features.values = ad::reshape(ad::slice(packed, 0, c), {c, resolution, resolution});
  out.depth.values = ad::reshape(ad::slice(packed, c, c + 1), {resolution, resolution});
  out.weight_sum = ad::reshape(ad::slice(packed, c + 1, c + 2), {resolution, resolution});
  return out;
}

}  // namespace adapter3d
