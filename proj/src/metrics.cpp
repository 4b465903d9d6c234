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

#include "adapter3d/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "adapter3d/errors.hpp"
#include "adapter3d/losses.hpp"

namespace adapter3d {

namespace {

struct SharedSamples {
  Rng latents, poses;
  SharedSamples(std::uint64_t seed)
      : latents(derive_seed(seed, "metric-latents")), poses(derive_seed(seed, "metric-poses")) {}
};

void require_n(std::size_t n, const char* who) {
  if (n == 0) throw ConfigError(std::string(who) + ": N must be >= 1");
}

void require_same_config(const Generator& a, const Generator& b, const char* who) {
  if (a.config().digest() != b.config().digest()) {
    throw ConfigError(std::string(who) + ": generators have different configurations");
  }
}

DepthMap render_depth(const Generator& g, const LatentCode& z, const CameraPose& pose,
                      const RenderConfig& render) {
  const StyleVector w = g.map_latent(z, pose);
  return render_image(g.decoder(), g.synthesize_triplanes(w), pose, render,
                      g.config().render_resolution)
      .depth;
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::vector<double> StubFaceEmbedder::embed(const RGBImage& img) const {
  const auto e = encoder_.encode_image(img);
  const auto v = e.values.value();
  return {v.begin(), v.end()};
}

std::vector<double> CallbackFaceEmbedder::embed(const RGBImage& img) const {
  auto v = fn_(img);
  double acc = 0.0;
  for (double x : v) acc += x * x;
  if (std::fabs(std::sqrt(acc) - 1.0) > 1e-6) {
    throw NumericalError("face embedder returned a vector that is not unit norm");
  }
  return v;
}

PosePairSampler independent_pose_pairs(const PoseDistribution& poses) {
  return [poses](Rng& rng) {
    CameraPose first = poses.sample(rng);
    CameraPose second = poses.sample(rng);
    return std::pair{first, second};
  };
}

double depth_mse(const DepthMap& a, const DepthMap& b) {
  if (a.values.shape() != b.values.shape()) throw ConfigError("depth_mse: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.values.size());
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ConfigError("cosine_similarity: dimension mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw DegenerateError("cosine_similarity: zero vector");
  return ab / std::sqrt(aa * bb);
}

double depth_metric(const Generator& g_s, const Generator& g_t, std::size_t n, std::uint64_t seed,
                    const MetricOptions& opts) {
  require_n(n, "depth_metric");
  require_same_config(g_s, g_t, "depth_metric");
  SharedSamples s(seed);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const LatentCode z{s.latents.normal_vector(g_s.config().z_dim), std::nullopt};
    const CameraPose pose = opts.poses.sample(s.poses);
    acc += depth_mse(render_depth(g_s, z, pose, opts.render), render_depth(g_t, z, pose, opts.render));
  }
  return acc / static_cast<double>(n);
}

double id_similarity(const Generator& g_s, const Generator& g_t, const FaceEmbedder& embedder,
                     std::size_t n, std::uint64_t seed, const MetricOptions& opts) {
  require_n(n, "id_similarity");
  require_same_config(g_s, g_t, "id_similarity");
  SharedSamples s(seed);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const LatentCode z{s.latents.normal_vector(g_s.config().z_dim), std::nullopt};
    const CameraPose pose = opts.poses.sample(s.poses);
    const auto a = embedder.embed(g_s.generate(z, pose, opts.render).rgb);
    const auto b = embedder.embed(g_t.generate(z, pose, opts.render).rgb);
    acc += cosine_similarity(a, b);
  }
  return acc / static_cast<double>(n);
}

double intra_id(const Generator& g_t, const FaceEmbedder& embedder, std::size_t n,
                const PosePairSampler& pose_pairs, std::uint64_t seed, const MetricOptions& opts) {
  require_n(n, "intra_id");
  SharedSamples s(seed);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const LatentCode z{s.latents.normal_vector(g_t.config().z_dim), std::nullopt};
    const auto [p1, p2] = pose_pairs(s.poses);
    const auto a = embedder.embed(g_t.generate(z, p1, opts.render).rgb);
    const auto b = embedder.embed(g_t.generate(z, p2, opts.render).rgb);
    acc += cosine_similarity(a, b);
  }
  return acc / static_cast<double>(n);
}

double remd_set_distance(const std::vector<RGBImage>& images_b,
                         const std::vector<RGBImage>& images_tar, const ImageEncoder& encoder,
                         std::size_t k) {
  if (images_b.empty() || images_tar.empty()) throw ConfigError("remd_set_distance: empty set");
  std::vector<TokenSequence> tb, tt;
  for (const auto& img : images_b) tb.push_back(encoder.encode_image_tokens(img, k));
  for (const auto& img : images_tar) tt.push_back(encoder.encode_image_tokens(img, k));
  double acc = 0.0;
  for (const auto& b : tb)
    for (const auto& t : tt) acc += remd_loss(b, t).item();
  return acc / static_cast<double>(tb.size() * tt.size());
}

std::string metrics_csv(const std::vector<MetricReport>& reports) {
  std::ostringstream out;
  out << "metric,value,n,seed,config_digest\n";
  for (const auto& r : reports) {
    out << r.name << ',' << format_value(r.value) << ',' << r.n << ',' << r.seed << ','
        << r.config_digest << '\n';
  }
  return out.str();
}

std::string metrics_table(const std::vector<MetricReport>& reports) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %16s %8s %20s  %s\n", "metric", "value", "n", "seed",
                "config");
  out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-10s %16s %8zu %20llu  %s\n", r.name.c_str(),
                  format_value(r.value).c_str(), r.n, static_cast<unsigned long long>(r.seed),
                  r.config_digest.c_str());
    out << line;
  }
  return out.str();
}

}  // namespace adapter3d
