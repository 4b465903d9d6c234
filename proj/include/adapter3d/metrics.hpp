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

// Consistency metrics: depth MSE, cross-domain identity similarity, and
// multi-view intra-identity similarity.

#ifndef ADAPTER3D_METRICS_HPP
#define ADAPTER3D_METRICS_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "adapter3d/embedding.hpp"
#include "adapter3d/generator.hpp"

namespace adapter3d {

/// Image -> unit-norm identity vector.
class FaceEmbedder {
 public:
  virtual ~FaceEmbedder() = default;
  virtual std::vector<double> embed(const RGBImage& img) const = 0;
};

/// Reuses the stub image encoder's global embedding.
class StubFaceEmbedder final : public FaceEmbedder {
 public:
  explicit StubFaceEmbedder(std::uint64_t seed = 0) : encoder_(seed) {}
  std::vector<double> embed(const RGBImage& img) const override;

 private:
  StubImageEncoder encoder_;
};

/// Plug-in slot; the callback's output is checked for unit norm.
class CallbackFaceEmbedder final : public FaceEmbedder {
 public:
  using Fn = std::function<std::vector<double>(const RGBImage&)>;
  explicit CallbackFaceEmbedder(Fn fn) : fn_(std::move(fn)) {}
  std::vector<double> embed(const RGBImage& img) const override;

 private:
  Fn fn_;
};

/// Two image sets -> scalar (FID/KID style). No implementation is shipped.
class DistributionMetric {
 public:
  virtual ~DistributionMetric() = default;
  virtual std::string name() const = 0;
  virtual double compute(const std::vector<RGBImage>& a, const std::vector<RGBImage>& b) const = 0;
};

struct MetricReport {
  std::string name;
  double value = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string config_digest;
};

struct MetricOptions {
  PoseDistribution poses;
  RenderConfig render = RenderConfig::evaluation();
};

using PosePairSampler = std::function<std::pair<CameraPose, CameraPose>(Rng&)>;
PosePairSampler independent_pose_pairs(const PoseDistribution& poses = {});

/// Per-pixel mean squared difference of two depth maps.
double depth_mse(const DepthMap& a, const DepthMap& b);
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

/// Mean over n shared latents and poses of the depth-map MSE.
double depth_metric(const Generator& g_s, const Generator& g_t, std::size_t n, std::uint64_t seed,
                    const MetricOptions& opts = {});
/// Mean over n shared latents and poses of cos(embed(I_A), embed(I_B)).
double id_similarity(const Generator& g_s, const Generator& g_t, const FaceEmbedder& embedder,
                     std::size_t n, std::uint64_t seed, const MetricOptions& opts = {});
/// Mean over n latents of cos between two rendered views.
double intra_id(const Generator& g_t, const FaceEmbedder& embedder, std::size_t n,
                const PosePairSampler& pose_pairs, std::uint64_t seed,
                const MetricOptions& opts = {});
/// Mean REMD over all (b, tar) pairs of layer-k tokens.
double remd_set_distance(const std::vector<RGBImage>& images_b,
                         const std::vector<RGBImage>& images_tar, const ImageEncoder& encoder,
                         std::size_t k);

std::string metrics_csv(const std::vector<MetricReport>& reports);
std::string metrics_table(const std::vector<MetricReport>& reports);

}  // namespace adapter3d

#endif  // ADAPTER3D_METRICS_HPP
