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

// Composite objectives, Adam, and the two-step progressive fine-tuning
// scheduler with its ablation modes.

#ifndef ADAPTER3D_ADAPTATION_HPP
#define ADAPTER3D_ADAPTATION_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "adapter3d/embedding.hpp"
#include "adapter3d/generator.hpp"
#include "adapter3d/losses.hpp"

namespace adapter3d {

enum class AdaptMode { progressive, trid_only, g2_only, joint };
enum class AdaptTask { one_shot, zero_shot };

std::string_view to_string(AdaptMode mode);
std::string_view to_string(AdaptTask task);
AdaptMode parse_adapt_mode(std::string_view name);
AdaptTask parse_adapt_task(std::string_view name);

struct LossWeights {
  double dir = 1.0;
  double dis = 2.0;
  double i_str = 3.0;
  double f_str = 5.0;

  /// "default" (1,2,3,5) or "ablation-table" (2,1,3,5).
  static LossWeights preset(std::string_view name);
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdaptationConfig {
  LossWeights lambda;
  std::size_t iters_step1 = 600;
  std::size_t iters_step2 = 1200;
  double learning_rate = 0.0025;
  std::size_t batch_size = 16;
  std::size_t token_layer = 3;
  std::size_t t_channels = 20;
  AdaptMode mode = AdaptMode::progressive;
  AdaptTask task = AdaptTask::one_shot;
  std::uint64_t seed = 0;
  AdamConfig adam;
  /// Source renders averaged into v_sou (one-shot only).
  std::size_t source_samples = 5000;
  PoseDistribution poses;
  RenderConfig render = RenderConfig::training();

  void validate() const;
};

/// Scalar loss values of one evaluation; unset means not evaluated.
struct LossComponents {
  double total = 0.0;
  std::optional<double> dir, dis, i_str, f_str;
};

struct LossTerms {
  std::optional<ad::Var> dir, dis, i_str, f_str;
};

struct CompositeLoss {
  ad::Var total;
  LossComponents values;
};

/// λ-weighted sum of the present terms; zero-weight terms are excluded.
CompositeLoss composite_loss_step1(const LossTerms& terms, const LossWeights& w);
/// As step 1 without the feature-structure term; passing one is an error.
CompositeLoss composite_loss_step2(const LossTerms& terms, const LossWeights& w);

class Adam {
 public:
  Adam(double learning_rate, AdamConfig cfg) : lr_(learning_rate), cfg_(cfg) {}
  /// Updates every parameter that requires grad, then rounds it to float32.
  void step(std::vector<Parameter>& params);
  std::size_t steps() const { return t_; }

 private:
  double lr_;
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Cached direction targets; built once per run.
struct DomainTarget {
  AdaptTask task = AdaptTask::one_shot;
  Embedding v_source;      // v_sou or v_sou_txt, unnormalized
  Embedding v_target;      // v_tar or v_tar_txt
  DomainDirection direction;
  std::optional<TokenSequence> target_tokens;  // T_tar, one-shot only
};

DomainTarget one_shot_target(const Generator& source, const RGBImage& reference,
                             const ImageEncoder& encoder, const AdaptationConfig& cfg);
DomainTarget zero_shot_target(const std::string& target_text, const TextEncoder& encoder,
                              const std::vector<std::string>& source_words);

/// Loss terms for one (source, target) sample pair. `step` is 1 or 2; step 2
/// never touches the feature-structure path. When the target still equals
/// the source exactly, the direction term is linearized around the
/// coincident point: 1 - <v_B - v_A, unit(dv_dom)>.
LossTerms evaluate_terms(const GeneratorOutput& a, const GeneratorOutput& b,
                         const DomainTarget& target, const ImageEncoder& encoder,
                         const AdaptationConfig& cfg, int step);

struct LossRecord {
  std::size_t iteration = 0;
  int step = 1;
  LossComponents values;  // batch means
};

struct AdaptationProbes {
  std::uint64_t feature_structure_evals[2] = {0, 0};  // per step label
  std::uint64_t backward_passes[2] = {0, 0};
  std::uint64_t direction_computations = 0;
};

struct AdaptationObserver {
  std::function<void(const LossRecord&)> on_record;
  /// After the step-1 boundary (iters_step1 iterations) and at the end.
  std::function<void(int step, const Generator& target)> on_step_end;
  /// Before a NumericalError propagates; receives the last good target.
  std::function<void(const Generator& last_good)> on_abort;
};

struct AdaptationResult {
  Generator target;
  std::vector<LossRecord> history;
  AdaptationProbes probes;
  DomainTarget domain;
};

/// Runs cfg.mode against a prepared domain target.
AdaptationResult run_ablation_mode(const Generator& source, const DomainTarget& target,
                                   const ImageEncoder& encoder, const AdaptationConfig& cfg,
                                   const AdaptationObserver& observer = {});

AdaptationResult adapt_one_shot(const Generator& source, const RGBImage& reference,
                                const ImageEncoder& encoder, const AdaptationConfig& cfg,
                                const AdaptationObserver& observer = {});

AdaptationResult adapt_zero_shot(const Generator& source, const std::string& target_text,
                                 const ImageEncoder& image_encoder,
                                 const TextEncoder& text_encoder, const AdaptationConfig& cfg,
                                 const AdaptationObserver& observer = {},
                                 const std::vector<std::string>& source_words =
                                     default_source_words());

/// `iteration,step,total,L_dir,L_dis,L_Istr,L_Fstr`; zero-shot drops L_dis.
std::string loss_csv_header(AdaptTask task);
std::string loss_csv_row(const LossRecord& r, AdaptTask task);

}  // namespace adapter3d

#endif  // ADAPTER3D_ADAPTATION_HPP
