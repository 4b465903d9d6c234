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

#include "adapter3d/generator.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "adapter3d/errors.hpp"
#include "adapter3d/ops.hpp"
#include "adapter3d/rng.hpp"

namespace adapter3d {

namespace {

constexpr double kLeakySlope = 0.2;

ad::Var linear(const ad::Var& x, const ad::Var& weight, const ad::Var& bias) {
  return ad::add_row_bias(ad::matmul(x, weight), bias);
}

}  // namespace

std::string_view to_string(ParamSet set) {
  switch (set) {
    case ParamSet::M:
      return "M";
    case ParamSet::G1:
      return "G1";
    case ParamSet::TriD:
      return "TriD";
    case ParamSet::G2:
      return "G2";
  }
  return "?";
}

std::optional<ParamSet> parse_param_set(std::string_view name) {
  for (auto s : kAllParamSets)
    if (to_string(s) == name) return s;
  return std::nullopt;
}

void GeneratorConfig::validate() const {
  auto positive = [](std::size_t v, const char* key) {
    if (v == 0) throw ConfigError(std::string("generator.") + key + " must be positive");
  };
  positive(z_dim, "z_dim");
  positive(w_dim, "w_dim");
  positive(mapping_hidden, "mapping_hidden");
  positive(synthesis_channels, "synthesis_channels");
  positive(synthesis_base_resolution, "synthesis_base_resolution");
  positive(plane_channels, "plane_channels");
  positive(decoder_hidden, "decoder_hidden");
  positive(feature_channels, "feature_channels");
  positive(render_resolution, "render_resolution");
  positive(superres_channels, "superres_channels");
  if (plane_resolution < 2) throw ConfigError("generator.plane_resolution must be >= 2");
  if (feature_channels < 3) throw ConfigError("generator.feature_channels must be >= 3");
  if (output_resolution < render_resolution || output_resolution % 2 != 0) {
    throw ConfigError("generator.output_resolution must be even and >= render_resolution");
  }
  if (!(init_scale > 0.0) || !std::isfinite(init_scale)) {
    throw ConfigError("generator.init_scale must be positive");
  }
}

std::string GeneratorConfig::canonical() const {
  std::ostringstream s;
  s << "z_dim=" << z_dim << ";w_dim=" << w_dim << ";mapping_hidden=" << mapping_hidden
    << ";synthesis_channels=" << synthesis_channels
    << ";synthesis_base_resolution=" << synthesis_base_resolution
    << ";plane_resolution=" << plane_resolution << ";plane_channels=" << plane_channels
    << ";decoder_hidden=" << decoder_hidden << ";feature_channels=" << feature_channels
    << ";render_resolution=" << render_resolution << ";output_resolution=" << output_resolution
    << ";superres_channels=" << superres_channels;
  return s.str();
}

std::string GeneratorConfig::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

LatentCode LatentCode::from_seed(std::uint64_t seed, std::size_t dim) {
  Rng rng(seed);
  return {rng.normal_vector(dim), seed};
}

bool ParamPartition::is_disjoint_and_exhaustive(const std::vector<std::string>& all_names) const {
  std::set<std::string> seen;
  std::size_t total = 0;
  for (const auto& [set, infos] : sets) {
    for (const auto& info : infos) {
      if (!seen.insert(info.name).second) return false;
      ++total;
    }
  }
  const std::set<std::string> expected(all_names.begin(), all_names.end());
  return total == all_names.size() && seen == expected;
}

Generator::Generator(GeneratorConfig cfg) : config_(cfg) {
  config_.validate();
  const auto& c = config_;
  const double s = c.init_scale;
  const std::size_t pose_dim = 25;

  add_parameter("mapping.fc0.weight", ParamSet::M, {c.z_dim + pose_dim, c.mapping_hidden}, s);
  add_parameter("mapping.fc0.bias", ParamSet::M, {c.mapping_hidden}, s);
  add_parameter("mapping.fc1.weight", ParamSet::M, {c.mapping_hidden, c.w_dim}, s);
  add_parameter("mapping.fc1.bias", ParamSet::M, {c.w_dim}, s);

  const std::size_t sc = c.synthesis_channels;
  // The learned constant input uses unit variance, as in StyleGAN; with
  // demodulated convolutions the planes then carry O(1) features.
  add_parameter("synthesis.const", ParamSet::G1,
                {sc, c.synthesis_base_resolution, c.synthesis_base_resolution}, 1.0);
  for (const char* block : {"synthesis.b0", "synthesis.b1"}) {
    const std::string p = block;
    add_parameter(p + ".affine.weight", ParamSet::G1, {c.w_dim, sc}, s);
    add_parameter(p + ".affine.bias", ParamSet::G1, {sc}, s);
    add_parameter(p + ".conv.weight", ParamSet::G1, {sc, sc, 3, 3}, s);
    add_parameter(p + ".conv.bias", ParamSet::G1, {sc}, s);
  }
  add_parameter("synthesis.toplanes.affine.weight", ParamSet::G1, {c.w_dim, sc}, s);
  add_parameter("synthesis.toplanes.affine.bias", ParamSet::G1, {sc}, s);
  add_parameter("synthesis.toplanes.conv.weight", ParamSet::G1, {3 * c.plane_channels, sc, 1, 1}, s);
  add_parameter("synthesis.toplanes.conv.bias", ParamSet::G1, {3 * c.plane_channels}, s);

  add_parameter("decoder.fc0.weight", ParamSet::TriD, {c.plane_channels, c.decoder_hidden}, s);
  add_parameter("decoder.fc0.bias", ParamSet::TriD, {c.decoder_hidden}, s);
  add_parameter("decoder.fc1.weight", ParamSet::TriD, {c.decoder_hidden, c.feature_channels + 1}, s);
  add_parameter("decoder.fc1.bias", ParamSet::TriD, {c.feature_channels + 1}, s);

  const std::size_t rc = c.superres_channels;
  add_parameter("superres.b0.affine.weight", ParamSet::G2, {c.w_dim, c.feature_channels}, s);
  add_parameter("superres.b0.affine.bias", ParamSet::G2, {c.feature_channels}, s);
  add_parameter("superres.b0.conv.weight", ParamSet::G2, {rc, c.feature_channels, 3, 3}, s);
  add_parameter("superres.b0.conv.bias", ParamSet::G2, {rc}, s);
  add_parameter("superres.b1.affine.weight", ParamSet::G2, {c.w_dim, rc}, s);
  add_parameter("superres.b1.affine.bias", ParamSet::G2, {rc}, s);
  add_parameter("superres.b1.conv.weight", ParamSet::G2, {rc, rc, 3, 3}, s);
  add_parameter("superres.b1.conv.bias", ParamSet::G2, {rc}, s);
  add_parameter("superres.torgb.affine.weight", ParamSet::G2, {c.w_dim, rc}, s);
  add_parameter("superres.torgb.affine.bias", ParamSet::G2, {rc}, s);
  add_parameter("superres.torgb.conv.weight", ParamSet::G2, {3, rc, 1, 1}, s);
  add_parameter("superres.torgb.conv.bias", ParamSet::G2, {3}, s);
}

Generator::Generator(const Generator& other)
    : config_(other.config_), trainable_(other.trainable_) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) {
    const auto values = p.var.value();
    params_.push_back({p.name, p.set,
                       ad::Var::leaf(p.var.shape(), {values.begin(), values.end()},
                                     p.var.requires_grad())});
  }
}

Generator& Generator::operator=(const Generator& other) {
  if (this != &other) {
    Generator copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void Generator::add_parameter(const std::string& name, ParamSet set, ad::Shape shape,
                              double stddev, bool round_to_float) {
  Rng rng(derive_seed(config_.init_seed, name));
  auto values = rng.normal_vector(ad::numel(shape), stddev);
  // Float-representable initial values make checkpoint round trips exact.
  if (round_to_float)
    for (auto& v : values) v = static_cast<double>(static_cast<float>(v));
  params_.push_back({name, set, ad::Var::leaf(std::move(shape), std::move(values), false)});
}

const Parameter& Generator::parameter(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return p;
  throw InternalError("unknown generator parameter '" + std::string(name) + "'");
}

Parameter& Generator::parameter(std::string_view name) {
  return const_cast<Parameter&>(std::as_const(*this).parameter(name));
}

std::vector<std::string> Generator::parameter_names() const {
  std::vector<std::string> names;
  names.reserve(params_.size());
  for (const auto& p : params_) names.push_back(p.name);
  return names;
}

ParamPartition Generator::partition_parameters() const {
  ParamPartition part;
  for (auto s : kAllParamSets) part.sets[s];
  for (const auto& p : params_) {
    bool known = false;
    for (auto s : kAllParamSets) known = known || s == p.set;
    if (!known) throw InternalError("parameter '" + p.name + "' has no partition set");
    part.sets[p.set].push_back({p.name, p.var.shape()});
  }
  if (!part.is_disjoint_and_exhaustive(parameter_names())) {
    throw InternalError("parameter partition is not disjoint and exhaustive");
  }
  part.trainable = trainable_;
  return part;
}

void Generator::set_trainable(const std::set<ParamSet>& sets) {
  trainable_ = sets;
  for (auto& p : params_) p.var.set_requires_grad(sets.count(p.set) > 0);
}

void Generator::zero_grad() {
  for (auto& p : params_) p.var.zero_grad();
}

StyleVector Generator::map_latent(const LatentCode& z, const CameraPose& pose) const {
  if (z.values.size() != config_.z_dim) {
    throw ConfigError("latent code has dimension " + std::to_string(z.values.size()) +
                      ", generator expects " + std::to_string(config_.z_dim));
  }
  for (double v : z.values)
    if (!std::isfinite(v)) throw ConfigError("latent code has non-finite entries");
  pose.validate();
  std::vector<double> input(z.values);
  const auto cond = pose.flatten();
  input.insert(input.end(), cond.begin(), cond.end());
  const std::size_t in_dim = input.size();
  ad::Var x = ad::Var::constant({1, in_dim}, std::move(input));
  x = ad::leaky_relu(linear(x, var("mapping.fc0.weight"), var("mapping.fc0.bias")), kLeakySlope);
  x = ad::leaky_relu(linear(x, var("mapping.fc1.weight"), var("mapping.fc1.bias")), kLeakySlope);
  return {ad::reshape(x, {config_.w_dim})};
}

ad::Var Generator::style(const StyleVector& w, std::string_view prefix) const {
  const std::string p(prefix);
  if (w.values.size() != config_.w_dim) throw ConfigError("style vector has wrong dimension");
  ad::Var row = ad::reshape(w.values, {1, config_.w_dim});
  ad::Var s = linear(row, var(p + ".affine.weight"), var(p + ".affine.bias"));
  s = ad::add_scalar(s, 1.0);
  return ad::reshape(s, {s.size()});
}

ad::Var Generator::modulated_conv(const ad::Var& x, const StyleVector& w, std::string_view prefix,
                                  bool demodulate) const {
  const std::string p(prefix);
  const ad::Var weight = ad::modulate(var(p + ".conv.weight"), style(w, prefix), demodulate);
  return ad::add_channel_bias(ad::conv2d(x, weight), var(p + ".conv.bias"));
}

TriPlanes Generator::synthesize_triplanes(const StyleVector& w) const {
  for (double v : w.values.value())
    if (!std::isfinite(v)) throw NumericalError("style vector has non-finite entries");
  const auto& c = config_;
  ad::Var x = var("synthesis.const");
  x = ad::leaky_relu(modulated_conv(x, w, "synthesis.b0", true), kLeakySlope);
  x = ad::resize_bilinear(x, c.plane_resolution, c.plane_resolution);
  x = ad::leaky_relu(modulated_conv(x, w, "synthesis.b1", true), kLeakySlope);
  x = modulated_conv(x, w, "synthesis.toplanes", true);
  return TriPlanes::from_channels(x, c.plane_channels);
}

TriplaneDecoder Generator::decoder() const {
  return {var("decoder.fc0.weight"), var("decoder.fc0.bias"), var("decoder.fc1.weight"),
          var("decoder.fc1.bias")};
}

PointSample Generator::decode_point(std::span<const double> feature) const {
  return decoder().decode(feature);
}

RGBImage Generator::super_resolve(const FeatureImage& features, const StyleVector& w) const {
  const auto& c = config_;
  const ad::Var& f = features.values;
  if (f.rank() != 3 || f.dim(0) != c.feature_channels || f.dim(1) != c.render_resolution ||
      f.dim(2) != c.render_resolution) {
    throw ConfigError("super_resolve: expected feature image [" +
                      std::to_string(c.feature_channels) + "," +
                      std::to_string(c.render_resolution) + "," +
                      std::to_string(c.render_resolution) + "], got " + ad::shape_string(f.shape()));
  }
  const std::size_t mid = c.output_resolution / 2;
  const std::size_t out = c.output_resolution;
  ad::Var x = ad::resize_bilinear(f, mid, mid);
  x = ad::leaky_relu(modulated_conv(x, w, "superres.b0", true), kLeakySlope);
  x = ad::resize_bilinear(x, out, out);
  x = ad::leaky_relu(modulated_conv(x, w, "superres.b1", true), kLeakySlope);
  x = modulated_conv(x, w, "superres.torgb", false);
  const ad::Var skip = ad::resize_bilinear(ad::slice(f, 0, 3), out, out);
  return {ad::add(x, skip)};
}

GeneratorOutput Generator::render_from_planes(const StyleVector& w, const TriPlanes& planes,
                                              const CameraPose& pose,
                                              const RenderConfig& render) const {
  auto rendered = render_image(decoder(), planes, pose, render, config_.render_resolution);
  GeneratorOutput out;
  out.rgb = super_resolve(rendered.features, w);
  out.features = std::move(rendered.features);
  out.depth = std::move(rendered.depth);
  return out;
}

GeneratorOutput Generator::generate_from_style(const StyleVector& w, const CameraPose& pose,
                                               const RenderConfig& render) const {
  return render_from_planes(w, synthesize_triplanes(w), pose, render);
}

GeneratorOutput Generator::generate(const LatentCode& z, const CameraPose& pose,
                                    const RenderConfig& render) const {
  return generate_from_style(map_latent(z, pose), pose, render);
}

std::uint64_t Generator::parameter_hash(std::optional<ParamSet> only) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : params_) {
    if (only && p.set != *only) continue;
    h = fnv1a64(p.name, h);
    const auto v = p.var.value();
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double)), h);
  }
  return h;
}

std::size_t Generator::parameter_count(std::optional<ParamSet> only) const {
  std::size_t n = 0;
  for (const auto& p : params_)
    if (!only || p.set == *only) n += p.var.size();
  return n;
}

}  // namespace adapter3d
