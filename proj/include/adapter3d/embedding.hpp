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

// Image/text encoders: global embeddings, per-layer token sequences, and the
// source-domain mean embeddings used to build domain directions.

#ifndef ADAPTER3D_EMBEDDING_HPP
#define ADAPTER3D_EMBEDDING_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "adapter3d/autograd.hpp"
#include "adapter3d/camera.hpp"
#include "adapter3d/generator.hpp"

namespace adapter3d {

struct Embedding {
  ad::Var values;  // [d_e]
  std::size_t dim() const { return values.size(); }
};

/// Tokens of layer `layer`, stored as rows of an [n, d_t] matrix.
struct TokenSequence {
  ad::Var tokens;
  std::size_t layer = 0;

  std::size_t count() const { return tokens.dim(0); }
  std::size_t dim() const { return tokens.dim(1); }
};

struct EncoderSpec {
  enum class Kind { stub, external };
  Kind kind = Kind::stub;
  std::size_t token_layer = 3;
  std::size_t token_dim = 16;
  std::uint64_t seed = 0;

  void validate() const;
};

class ImageEncoder {
 public:
  virtual ~ImageEncoder() = default;
  /// Unit-norm global embedding; differentiable in the image.
  virtual Embedding encode_image(const RGBImage& img) const = 0;
  /// Layer-k tokens, k in [1, depth()].
  virtual TokenSequence encode_image_tokens(const RGBImage& img, std::size_t k) const = 0;
  virtual std::size_t depth() const = 0;
  virtual std::size_t embedding_dim() const = 0;
};

class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual Embedding encode_text(const std::string& text) const = 0;
};

/// Patch encoder: 32x32 input, 8x8 patches, one seeded linear projection plus
/// bias per layer. The global embedding is the normalized mean of the last
/// layer's tokens.
class StubImageEncoder final : public ImageEncoder {
 public:
  static constexpr std::size_t kInputSize = 32;
  static constexpr std::size_t kPatch = 8;
  static constexpr std::size_t kLayers = 4;

  explicit StubImageEncoder(std::uint64_t seed = 0, std::size_t token_dim = 16);

  Embedding encode_image(const RGBImage& img) const override;
  TokenSequence encode_image_tokens(const RGBImage& img, std::size_t k) const override;
  std::size_t depth() const override { return kLayers; }
  std::size_t embedding_dim() const override { return token_dim_; }

 private:
  ad::Var patches(const RGBImage& img) const;

  std::size_t token_dim_;
  std::vector<ad::Var> projection_;  // [192, d_t] per layer
  std::vector<ad::Var> bias_;        // [d_t] per layer
  std::vector<std::size_t> patch_index_;
};

/// Lowercased whitespace tokens hashed into rows of a seeded table, summed
/// and normalized.
class StubTextEncoder final : public TextEncoder {
 public:
  static constexpr std::size_t kVocabRows = 1024;

  explicit StubTextEncoder(std::uint64_t seed = 0, std::size_t dim = 16);
  Embedding encode_text(const std::string& text) const override;

 private:
  std::size_t dim_;
  std::vector<double> table_;
};

/// Slot for real encoders (e.g. CLIP weights behind a foreign runtime). The
/// callbacks must return patch tokens only, without the class token; zero
/// tokens are rejected.
class ExternalImageEncoder final : public ImageEncoder {
 public:
  using EmbedFn = std::function<ad::Var(const ad::Var& pixels)>;
  using TokenFn = std::function<ad::Var(const ad::Var& pixels, std::size_t k)>;

  ExternalImageEncoder(EmbedFn embed, TokenFn tokens, std::size_t depth, std::size_t dim);

  Embedding encode_image(const RGBImage& img) const override;
  TokenSequence encode_image_tokens(const RGBImage& img, std::size_t k) const override;
  std::size_t depth() const override { return depth_; }
  std::size_t embedding_dim() const override { return dim_; }

 private:
  EmbedFn embed_;
  TokenFn tokens_;
  std::size_t depth_, dim_;
};

class ExternalTextEncoder final : public TextEncoder {
 public:
  using EmbedFn = std::function<std::vector<double>(const std::string&)>;
  explicit ExternalTextEncoder(EmbedFn embed) : embed_(std::move(embed)) {}
  Embedding encode_text(const std::string& text) const override;

 private:
  EmbedFn embed_;
};

std::unique_ptr<ImageEncoder> make_image_encoder(const EncoderSpec& spec);
std::unique_ptr<TextEncoder> make_text_encoder(const EncoderSpec& spec);

/// Unnormalized arithmetic mean of `n` image embeddings; `sample(i)` yields
/// the i-th image. Summation order is fixed.
Embedding mean_embedding(const ImageEncoder& encoder,
                         const std::function<RGBImage(std::size_t)>& sample, std::size_t n);

/// Mean embedding of `n` source renders with latents and poses drawn from
/// `seed`.
Embedding mean_source_embedding(const Generator& generator, const ImageEncoder& encoder,
                                std::size_t n, std::uint64_t seed,
                                const PoseDistribution& poses = {},
                                const RenderConfig& render = RenderConfig::training());

Embedding mean_text_embedding(const TextEncoder& encoder, const std::vector<std::string>& words);

/// The packaged 50-word source prompt list.
const std::vector<std::string>& default_source_words();
std::vector<std::string> load_word_list(const std::string& path);

}  // namespace adapter3d

#endif  // ADAPTER3D_EMBEDDING_HPP
