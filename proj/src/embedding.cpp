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

#include "adapter3d/embedding.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "adapter3d/errors.hpp"
#include "adapter3d/ops.hpp"
#include "adapter3d/rng.hpp"

#ifndef ADAPTER3D_RESOURCE_DIR
#define ADAPTER3D_RESOURCE_DIR "resources"
#endif

namespace adapter3d {

namespace {

constexpr double kStubBiasScale = 0.5;

void check_image(const RGBImage& img, const char* who) {
  const ad::Var& p = img.pixels;
  if (!p.defined() || p.rank() != 3 || p.dim(0) != 3) {
    throw ConfigError(std::string(who) + ": expected a [3,H,W] image");
  }
  for (double v : p.value())
    if (std::isnan(v) || std::isinf(v)) throw NumericalError(std::string(who) + ": non-finite pixel");
}

void reject_zero_rows(const ad::Var& tokens, const char* who) {
  const std::size_t n = tokens.dim(0), d = tokens.dim(1);
  for (std::size_t i = 0; i < n; ++i) {
    bool zero = true;
    for (std::size_t j = 0; j < d && zero; ++j) zero = tokens[i * d + j] == 0.0;
    if (zero) throw DegenerateError(std::string(who) + ": token " + std::to_string(i) + " is zero");
  }
}

}  // namespace

void EncoderSpec::validate() const {
  if (token_layer < 1) throw ConfigError("encoder.token_layer must be >= 1");
  if (token_dim < 1) throw ConfigError("encoder.token_dim must be >= 1");
}

StubImageEncoder::StubImageEncoder(std::uint64_t seed, std::size_t token_dim)
    : token_dim_(token_dim) {
  if (token_dim == 0) throw ConfigError("stub encoder: token_dim must be positive");
  const std::size_t patch_len = 3 * kPatch * kPatch;
  for (std::size_t k = 1; k <= kLayers; ++k) {
    Rng rng(derive_seed(seed, "stub-image-layer-" + std::to_string(k)));
    projection_.push_back(ad::Var::constant(
        {patch_len, token_dim},
        rng.normal_vector(patch_len * token_dim, 1.0 / std::sqrt(static_cast<double>(patch_len)))));
    bias_.push_back(ad::Var::constant({token_dim}, rng.normal_vector(token_dim, kStubBiasScale)));
  }
  // Row p of the patch matrix lists patch p's pixels channel-major.
  const std::size_t grid = kInputSize / kPatch;
  patch_index_.reserve(grid * grid * patch_len);
  for (std::size_t py = 0; py < grid; ++py)
    for (std::size_t px = 0; px < grid; ++px)
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < kPatch; ++y)
          for (std::size_t x = 0; x < kPatch; ++x)
            patch_index_.push_back((c * kInputSize + py * kPatch + y) * kInputSize + px * kPatch + x);
}

ad::Var StubImageEncoder::patches(const RGBImage& img) const {
  check_image(img, "encode_image");
  const ad::Var resized = ad::resize_bilinear(img.pixels, kInputSize, kInputSize);
  const std::size_t grid = kInputSize / kPatch;
  return ad::gather(resized, patch_index_, {grid * grid, 3 * kPatch * kPatch});
}

TokenSequence StubImageEncoder::encode_image_tokens(const RGBImage& img, std::size_t k) const {
  if (k < 1 || k > kLayers) {
    throw ConfigError("encode_image_tokens: layer " + std::to_string(k) + " outside [1," +
                      std::to_string(kLayers) + "]");
  }
  const ad::Var x = patches(img);
  return {ad::add_row_bias(ad::matmul(x, projection_[k - 1]), bias_[k - 1]), k};
}

Embedding StubImageEncoder::encode_image(const RGBImage& img) const {
  const TokenSequence last = encode_image_tokens(img, kLayers);
  return {ad::normalize(ad::mean_rows(last.tokens))};
}

StubTextEncoder::StubTextEncoder(std::uint64_t seed, std::size_t dim) : dim_(dim) {
  if (dim == 0) throw ConfigError("stub text encoder: dim must be positive");
  Rng rng(derive_seed(seed, "stub-text-table"));
  table_ = rng.normal_vector(kVocabRows * dim);
}

Embedding StubTextEncoder::encode_text(const std::string& text) const {
  std::istringstream in(text);
  std::string word;
  std::vector<double> acc(dim_, 0.0);
  std::size_t count = 0;
  while (in >> word) {
    for (auto& ch : word) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    const std::size_t row = fnv1a64(word) % kVocabRows;
    for (std::size_t j = 0; j < dim_; ++j) acc[j] += table_[row * dim_ + j];
    ++count;
  }
  if (count == 0) throw ConfigError("encode_text: empty text");
  return {ad::normalize(ad::Var::constant({dim_}, std::move(acc)))};
}

ExternalImageEncoder::ExternalImageEncoder(EmbedFn embed, TokenFn tokens, std::size_t depth,
                                           std::size_t dim)
    : embed_(std::move(embed)), tokens_(std::move(tokens)), depth_(depth), dim_(dim) {
  if (!embed_ || !tokens_) throw ConfigError("external encoder: missing callback");
}

Embedding ExternalImageEncoder::encode_image(const RGBImage& img) const {
  check_image(img, "encode_image");
  const ad::Var raw = embed_(img.pixels);
  if (raw.size() != dim_) throw ConfigError("external encoder: embedding has wrong dimension");
  return {ad::normalize(ad::reshape(raw, {dim_}))};
}

TokenSequence ExternalImageEncoder::encode_image_tokens(const RGBImage& img, std::size_t k) const {
  if (k < 1 || k > depth_) throw ConfigError("encode_image_tokens: layer out of range");
  check_image(img, "encode_image_tokens");
  ad::Var t = tokens_(img.pixels, k);
  if (t.rank() != 2 || t.dim(0) == 0) throw ConfigError("external encoder: tokens must be [n,d]");
  reject_zero_rows(t, "external encoder");
  return {t, k};
}

Embedding ExternalTextEncoder::encode_text(const std::string& text) const {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ConfigError("encode_text: empty text");
  }
  auto v = embed_(text);
  const std::size_t d = v.size();
  return {ad::normalize(ad::Var::constant({d}, std::move(v)))};
}

std::unique_ptr<ImageEncoder> make_image_encoder(const EncoderSpec& spec) {
  spec.validate();
  if (spec.kind != EncoderSpec::Kind::stub) {
    throw ConfigError("external image encoders must be constructed with their callbacks");
  }
  auto enc = std::make_unique<StubImageEncoder>(spec.seed, spec.token_dim);
  if (spec.token_layer > enc->depth()) throw ConfigError("encoder.token_layer exceeds encoder depth");
  return enc;
}

std::unique_ptr<TextEncoder> make_text_encoder(const EncoderSpec& spec) {
  spec.validate();
  if (spec.kind != EncoderSpec::Kind::stub) {
    throw ConfigError("external text encoders must be constructed with their callbacks");
  }
  return std::make_unique<StubTextEncoder>(spec.seed, spec.token_dim);
}

Embedding mean_embedding(const ImageEncoder& encoder,
                         const std::function<RGBImage(std::size_t)>& sample, std::size_t n) {
  if (n == 0) throw ConfigError("mean embedding: need at least one sample");
  std::vector<double> acc;
  for (std::size_t i = 0; i < n; ++i) {
    const Embedding e = encoder.encode_image(sample(i));
    if (acc.empty()) acc.assign(e.dim(), 0.0);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += e.values[j];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& v : acc) v *= inv;
  const std::size_t d = acc.size();
  return {ad::Var::constant({d}, std::move(acc))};
}

Embedding mean_source_embedding(const Generator& generator, const ImageEncoder& encoder,
                                std::size_t n, std::uint64_t seed, const PoseDistribution& poses,
                                const RenderConfig& render) {
  Rng pose_rng(derive_seed(seed, "source-mean-poses"));
  Rng latent_rng(derive_seed(seed, "source-mean-latents"));
  const std::size_t zdim = generator.config().z_dim;
  return mean_embedding(
      encoder,
      [&](std::size_t) {
        const LatentCode z{latent_rng.normal_vector(zdim), std::nullopt};
        return generator.generate(z, poses.sample(pose_rng), render).rgb;
      },
      n);
}

Embedding mean_text_embedding(const TextEncoder& encoder, const std::vector<std::string>& words) {
  if (words.empty()) throw ConfigError("mean_text_embedding: empty word list");
  std::vector<double> acc;
  for (const auto& w : words) {
    const Embedding e = encoder.encode_text(w);
    if (acc.empty()) acc.assign(e.dim(), 0.0);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += e.values[j];
  }
  const double inv = 1.0 / static_cast<double>(words.size());
  for (auto& v : acc) v *= inv;
  const std::size_t d = acc.size();
  return {ad::Var::constant({d}, std::move(acc))};
}

std::vector<std::string> load_word_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open word list '" + path + "'");
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    words.push_back(line.substr(b, e - b + 1));
  }
  if (words.empty()) throw ConfigError("word list '" + path + "' is empty");
  return words;
}

const std::vector<std::string>& default_source_words() {
  static const std::vector<std::string> words = [] {
    const char* dir = std::getenv("ADAPTER3D_RESOURCE_DIR");
    return load_word_list(std::string(dir ? dir : ADAPTER3D_RESOURCE_DIR) + "/source_words.txt");
  }();
  return words;
}

}  // namespace adapter3d
