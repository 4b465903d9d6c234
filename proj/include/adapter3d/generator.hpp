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

// Desk-scale tri-plane generator: mapping network (M), style-modulated
// tri-plane synthesis (G1), tri-plane decoder (TriD) with volume rendering,
// and a style-modulated super-resolution head (G2).

#ifndef ADAPTER3D_GENERATOR_HPP
#define ADAPTER3D_GENERATOR_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "adapter3d/autograd.hpp"
#include "adapter3d/camera.hpp"
#include "adapter3d/renderer.hpp"

namespace adapter3d {

enum class ParamSet { M, G1, TriD, G2 };

inline constexpr std::array<ParamSet, 4> kAllParamSets{ParamSet::M, ParamSet::G1, ParamSet::TriD,
                                                       ParamSet::G2};

std::string_view to_string(ParamSet set);
std::optional<ParamSet> parse_param_set(std::string_view name);

struct GeneratorConfig {
  std::size_t z_dim = 64;
  std::size_t w_dim = 64;
  std::size_t mapping_hidden = 64;
  std::size_t synthesis_channels = 32;
  std::size_t synthesis_base_resolution = 16;
  std::size_t plane_resolution = 32;
  std::size_t plane_channels = 8;
  std::size_t decoder_hidden = 64;
  std::size_t feature_channels = 32;
  std::size_t render_resolution = 32;
  std::size_t output_resolution = 128;
  std::size_t superres_channels = 16;
  double init_scale = 0.02;
  std::uint64_t init_seed = 0;

  void validate() const;
  /// Canonical "key=value;..." text of the architecture fields.
  std::string canonical() const;
  /// 16 hex digits of FNV-1a over canonical().
  std::string digest() const;
};

struct LatentCode {
  std::vector<double> values;
  std::optional<std::uint64_t> seed;

  static LatentCode from_seed(std::uint64_t seed, std::size_t dim);
};

struct StyleVector {
  ad::Var values;  // [w_dim]
};

/// Image in model range, channel-major [3, H, W].
struct RGBImage {
  ad::Var pixels;
  std::size_t height() const { return pixels.dim(1); }
  std::size_t width() const { return pixels.dim(2); }
};

struct GeneratorOutput {
  RGBImage rgb;
  FeatureImage features;
  DepthMap depth;
};

struct ParamInfo {
  std::string name;
  ad::Shape shape;
};

struct ParamPartition {
  std::map<ParamSet, std::vector<ParamInfo>> sets;
  std::set<ParamSet> trainable;

  /// Every name appears in exactly one set and the sets cover `all_names`.
  bool is_disjoint_and_exhaustive(const std::vector<std::string>& all_names) const;
};

struct Parameter {
  std::string name;
  ParamSet set;
  ad::Var var;
};

/// Parameters are leaves of the autograd graph. Forward passes only read
/// them, so concurrent forwards are safe; optimizer updates need exclusive
/// access. Copies are deep.
class Generator {
 public:
  explicit Generator(GeneratorConfig cfg = {});
  Generator(const Generator& other);
  Generator& operator=(const Generator& other);
  Generator(Generator&&) noexcept = default;
  Generator& operator=(Generator&&) noexcept = default;

  const GeneratorConfig& config() const { return config_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::vector<Parameter>& parameters() { return params_; }
  const Parameter& parameter(std::string_view name) const;
  Parameter& parameter(std::string_view name);
  std::vector<std::string> parameter_names() const;

  /// Named partition of every parameter into {M, G1, TriD, G2}.
  ParamPartition partition_parameters() const;
  /// Enables gradients for exactly the listed sets.
  void set_trainable(const std::set<ParamSet>& sets);
  std::set<ParamSet> trainable() const { return trainable_; }
  void zero_grad();

  StyleVector map_latent(const LatentCode& z, const CameraPose& pose) const;
  TriPlanes synthesize_triplanes(const StyleVector& w) const;
  TriplaneDecoder decoder() const;
  PointSample decode_point(std::span<const double> feature) const;
  RGBImage super_resolve(const FeatureImage& features, const StyleVector& w) const;

  GeneratorOutput generate(const LatentCode& z, const CameraPose& pose,
                           const RenderConfig& render) const;
  /// Pipeline from a given style vector; used by interpolation.
  GeneratorOutput generate_from_style(const StyleVector& w, const CameraPose& pose,
                                      const RenderConfig& render) const;
  /// Render + super-resolve with externally supplied planes and style.
  GeneratorOutput render_from_planes(const StyleVector& w, const TriPlanes& planes,
                                     const CameraPose& pose, const RenderConfig& render) const;

  /// FNV-1a over names and raw parameter bytes, optionally restricted to one set.
  std::uint64_t parameter_hash(std::optional<ParamSet> only = std::nullopt) const;
  std::size_t parameter_count(std::optional<ParamSet> only = std::nullopt) const;

 private:
  void add_parameter(const std::string& name, ParamSet set, ad::Shape shape, double stddev,
                     bool round_to_float = true);
  ad::Var style(const StyleVector& w, std::string_view prefix) const;
  ad::Var modulated_conv(const ad::Var& x, const StyleVector& w, std::string_view prefix,
                         bool demodulate) const;
  const ad::Var& var(std::string_view name) const { return parameter(name).var; }

  GeneratorConfig config_;
  std::vector<Parameter> params_;
  std::set<ParamSet> trainable_;
};

}  // namespace adapter3d

#endif  // ADAPTER3D_GENERATOR_HPP
