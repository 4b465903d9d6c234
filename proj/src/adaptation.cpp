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

#include "adapter3d/adaptation.hpp"

#include <cmath>
#include <cstdio>

#include "adapter3d/errors.hpp"
#include "adapter3d/ops.hpp"

namespace adapter3d {

namespace {

struct Phase {
  int step;
  std::set<ParamSet> trainable;
  std::size_t iterations;
  bool reset_optimizer;
};

std::vector<Phase> schedule(const AdaptationConfig& cfg) {
  const std::size_t a = cfg.iters_step1, b = cfg.iters_step2;
  switch (cfg.mode) {
    case AdaptMode::progressive:
      return {{1, {ParamSet::TriD}, a, true}, {2, {ParamSet::G2}, b, true}};
    case AdaptMode::trid_only:
      return {{1, {ParamSet::TriD}, a, true}, {1, {ParamSet::TriD}, b, false}};
    case AdaptMode::g2_only:
      return {{2, {ParamSet::G2}, a, true}, {2, {ParamSet::G2}, b, false}};
    case AdaptMode::joint:
      return {{1, {ParamSet::TriD, ParamSet::G2}, a, true},
              {1, {ParamSet::TriD, ParamSet::G2}, b, false}};
  }
  throw InternalError("unknown adaptation mode");
}

void add_term(ad::Var& total, const std::optional<ad::Var>& term, double weight,
              std::optional<double>& slot) {
  if (!term || weight == 0.0) return;
  slot = term->item();
  const ad::Var weighted = ad::scale(*term, weight);
  total = total.defined() ? ad::add(total, weighted) : weighted;
}

CompositeLoss combine(const LossTerms& terms, const LossWeights& w, bool with_f_str) {
  CompositeLoss out;
  add_term(out.total, terms.dir, w.dir, out.values.dir);
  add_term(out.total, terms.dis, w.dis, out.values.dis);
  add_term(out.total, terms.i_str, w.i_str, out.values.i_str);
  if (with_f_str) add_term(out.total, terms.f_str, w.f_str, out.values.f_str);
  if (!out.total.defined()) out.total = ad::Var::constant_scalar(0.0);
  out.values.total = out.total.item();
  return out;
}

double norm_of(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

void accumulate(std::optional<double>& sum, const std::optional<double>& v) {
  if (v) sum = sum.value_or(0.0) + *v;
}

void scale_slot(std::optional<double>& v, double f) {
  if (v) *v *= f;
}

}  // namespace

std::string_view to_string(AdaptMode mode) {
  switch (mode) {
    case AdaptMode::progressive:
      return "progressive";
    case AdaptMode::trid_only:
      return "trid_only";
    case AdaptMode::g2_only:
      return "g2_only";
    case AdaptMode::joint:
      return "joint";
  }
  return "?";
}

std::string_view to_string(AdaptTask task) {
  return task == AdaptTask::one_shot ? "one_shot" : "zero_shot";
}

AdaptMode parse_adapt_mode(std::string_view name) {
  for (auto m : {AdaptMode::progressive, AdaptMode::trid_only, AdaptMode::g2_only, AdaptMode::joint})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown adaptation mode '" + std::string(name) +
                    "' (expected progressive, trid_only, g2_only or joint)");
}

AdaptTask parse_adapt_task(std::string_view name) {
  if (name == "one_shot") return AdaptTask::one_shot;
  if (name == "zero_shot") return AdaptTask::zero_shot;
  throw ConfigError("unknown adaptation task '" + std::string(name) + "'");
}

LossWeights LossWeights::preset(std::string_view name) {
  if (name == "default") return {1.0, 2.0, 3.0, 5.0};
  if (name == "ablation-table") return {2.0, 1.0, 3.0, 5.0};
  throw ConfigError("unknown loss-weight preset '" + std::string(name) + "'");
}

void AdaptationConfig::validate() const {
  for (double l : {lambda.dir, lambda.dis, lambda.i_str, lambda.f_str}) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("adaptation: λ weights must be >= 0");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("adaptation.learning_rate must be positive");
  }
  if (batch_size < 1) throw ConfigError("adaptation.batch_size must be >= 1");
  if (token_layer < 1) throw ConfigError("adaptation.token_layer must be >= 1");
  if (t_channels < 1) throw ConfigError("adaptation.t_channels must be >= 1");
  if (source_samples < 1) throw ConfigError("adaptation.source_samples must be >= 1");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
      !(adam.eps > 0.0)) {
    throw ConfigError("adaptation: Adam needs betas in [0,1) and eps > 0");
  }
  render.validate();
}

CompositeLoss composite_loss_step1(const LossTerms& terms, const LossWeights& w) {
  return combine(terms, w, true);
}

CompositeLoss composite_loss_step2(const LossTerms& terms, const LossWeights& w) {
  if (terms.f_str) throw InternalError("step-2 objective received a feature-structure term");
  return combine(terms, w, false);
}

void Adam::step(std::vector<Parameter>& params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Var& p = params[i].var;
    if (!p.requires_grad()) continue;
    const auto g = p.grad();
    auto& value = p.mutable_value();
    auto& m = m_[i];
    auto& v = v_[i];
    if (m.empty()) {
      m.assign(value.size(), 0.0);
      v.assign(value.size(), 0.0);
    }
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double gj = g.empty() ? 0.0 : g[j];
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * gj;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * gj * gj;
      const double update = lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg_.eps);
      value[j] = static_cast<double>(static_cast<float>(value[j] - update));
    }
  }
}

DomainTarget one_shot_target(const Generator& source, const RGBImage& reference,
                             const ImageEncoder& encoder, const AdaptationConfig& cfg) {
  DomainTarget t;
  t.task = AdaptTask::one_shot;
  t.v_source = mean_source_embedding(source, encoder, cfg.source_samples,
                                     derive_seed(cfg.seed, "source-mean"), cfg.poses, cfg.render);
  t.v_target = {encoder.encode_image(reference).values.detach()};
  t.target_tokens = encoder.encode_image_tokens(reference, cfg.token_layer);
  t.target_tokens->tokens = t.target_tokens->tokens.detach();
  t.direction = domain_direction(t.v_target, t.v_source);
  if (t.direction.degenerate) {
    throw DegenerateError(
        "domain direction v_tar - v_sou has collapsed: the reference embeds onto the source mean");
  }
  return t;
}

DomainTarget zero_shot_target(const std::string& target_text, const TextEncoder& encoder,
                              const std::vector<std::string>& source_words) {
  DomainTarget t;
  t.task = AdaptTask::zero_shot;
  t.v_source = mean_text_embedding(encoder, source_words);
  t.v_target = encoder.encode_text(target_text);
  t.direction = domain_direction(t.v_target, t.v_source);
  if (t.direction.degenerate) {
    throw DegenerateError("text domain direction has collapsed: target text embeds onto the "
                          "source word mean");
  }
  return t;
}

LossTerms evaluate_terms(const GeneratorOutput& a, const GeneratorOutput& b,
                         const DomainTarget& target, const ImageEncoder& encoder,
                         const AdaptationConfig& cfg, int step) {
  const LossWeights& w = cfg.lambda;
  LossTerms terms;
  if (w.dir != 0.0) {
    const Embedding v_b = encoder.encode_image(b.rgb);
    const Embedding v_a{encoder.encode_image(a.rgb).values.detach()};
    std::vector<double> diff(v_b.dim());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = v_b.values[i] - v_a.values[i];
    if (norm_of(diff) < kDegenerateNorm) {
      const ad::Var unit = ad::normalize(target.direction.values);
      terms.dir = ad::add_scalar(ad::scale(ad::dot(ad::sub(v_b.values, v_a.values), unit), -1.0), 1.0);
    } else if (target.task == AdaptTask::one_shot) {
      terms.dir = direction_loss(v_b, v_a, target.direction);
    } else {
      terms.dir = text_direction_loss(v_b, v_a, target.direction);
    }
  }
  const bool need_dis = target.task == AdaptTask::one_shot && w.dis != 0.0;
  if (need_dis || w.i_str != 0.0) {
    const TokenSequence t_b = encoder.encode_image_tokens(b.rgb, cfg.token_layer);
    if (need_dis) {
      if (!target.target_tokens) throw InternalError("one-shot target is missing T_tar");
      terms.dis = remd_loss(t_b, *target.target_tokens);
    }
    if (w.i_str != 0.0) {
      TokenSequence t_a = encoder.encode_image_tokens(a.rgb, cfg.token_layer);
      t_a.tokens = t_a.tokens.detach();
      terms.i_str = image_structure_loss(t_b, t_a);
    }
  }
  if (step == 1 && w.f_str != 0.0) {
    terms.f_str = feature_structure_loss(b.features, FeatureImage{a.features.values.detach()},
                                         cfg.t_channels);
  }
  return terms;
}

AdaptationResult run_ablation_mode(const Generator& source, const DomainTarget& domain,
                                   const ImageEncoder& encoder, const AdaptationConfig& cfg,
                                   const AdaptationObserver& observer) {
  cfg.validate();
  if (cfg.token_layer > encoder.depth()) {
    throw ConfigError("adaptation.token_layer exceeds the encoder depth");
  }
  if (domain.task != cfg.task) throw ConfigError("domain target does not match adaptation task");

  AdaptationResult result{source, {}, {}, domain};
  result.probes.direction_computations = 1;
  Generator& target = result.target;
  Rng batch_rng(derive_seed(cfg.seed, "adaptation-batches"));
  const double inv_batch = 1.0 / static_cast<double>(cfg.batch_size);

  std::size_t iteration = 0;
  std::optional<Adam> adam;
  // State whose loss was last seen finite; handed to on_abort.
  std::optional<Generator> last_good;
  const auto phases = schedule(cfg);
  for (std::size_t pi = 0; pi < phases.size(); ++pi) {
    const Phase& phase = phases[pi];
    target.set_trainable(phase.trainable);
    if (phase.reset_optimizer || !adam) adam.emplace(cfg.learning_rate, cfg.adam);
    const bool upstream_trainable =
        phase.trainable.count(ParamSet::M) > 0 || phase.trainable.count(ParamSet::G1) > 0;
    const auto slot = static_cast<std::size_t>(phase.step - 1);

    for (std::size_t it = 0; it < phase.iterations; ++it, ++iteration) {
      target.zero_grad();
      LossRecord record{iteration, phase.step, {}};
      const std::uint64_t fstr_before = feature_structure_evaluations();
      try {
        for (std::size_t bi = 0; bi < cfg.batch_size; ++bi) {
          const LatentCode z{batch_rng.normal_vector(source.config().z_dim), std::nullopt};
          const CameraPose pose = cfg.poses.sample(batch_rng);
          const StyleVector w = source.map_latent(z, pose);
          const TriPlanes planes = source.synthesize_triplanes(w);
          const GeneratorOutput a = source.render_from_planes(w, planes, pose, cfg.render);
          const GeneratorOutput b = upstream_trainable
                                        ? target.generate(z, pose, cfg.render)
                                        : target.render_from_planes(w, planes, pose, cfg.render);
          const LossTerms terms = evaluate_terms(a, b, domain, encoder, cfg, phase.step);
          const CompositeLoss loss = phase.step == 1 ? composite_loss_step1(terms, cfg.lambda)
                                                     : composite_loss_step2(terms, cfg.lambda);
          if (!std::isfinite(loss.values.total)) {
            throw NumericalError("non-finite loss at iteration " + std::to_string(iteration) +
                                 " (step " + std::to_string(phase.step) + ")");
          }
          if (loss.total.requires_grad()) {
            ad::backward(ad::scale(loss.total, inv_batch));
            ++result.probes.backward_passes[slot];
          }
          record.values.total += loss.values.total;
          accumulate(record.values.dir, loss.values.dir);
          accumulate(record.values.dis, loss.values.dis);
          accumulate(record.values.i_str, loss.values.i_str);
          accumulate(record.values.f_str, loss.values.f_str);
        }
      } catch (const NumericalError&) {
        if (observer.on_abort) observer.on_abort(last_good ? *last_good : target);
        throw;
      }
      result.probes.feature_structure_evals[slot] += feature_structure_evaluations() - fstr_before;
      record.values.total *= inv_batch;
      scale_slot(record.values.dir, inv_batch);
      scale_slot(record.values.dis, inv_batch);
      scale_slot(record.values.i_str, inv_batch);
      scale_slot(record.values.f_str, inv_batch);
      if (observer.on_abort) last_good = target;
      adam->step(target.parameters());
      result.history.push_back(record);
      if (observer.on_record) observer.on_record(record);
    }
    if (pi == 0 && observer.on_step_end) observer.on_step_end(1, target);
  }
  target.set_trainable({});
  target.zero_grad();
  if (observer.on_step_end) observer.on_step_end(2, target);
  return result;
}

AdaptationResult adapt_one_shot(const Generator& source, const RGBImage& reference,
                                const ImageEncoder& encoder, const AdaptationConfig& cfg,
                                const AdaptationObserver& observer) {
  if (cfg.task != AdaptTask::one_shot) throw ConfigError("adapt_one_shot needs task = one_shot");
  cfg.validate();
  const DomainTarget domain = one_shot_target(source, reference, encoder, cfg);
  return run_ablation_mode(source, domain, encoder, cfg, observer);
}

AdaptationResult adapt_zero_shot(const Generator& source, const std::string& target_text,
                                 const ImageEncoder& image_encoder,
                                 const TextEncoder& text_encoder, const AdaptationConfig& cfg,
                                 const AdaptationObserver& observer,
                                 const std::vector<std::string>& source_words) {
  if (cfg.task != AdaptTask::zero_shot) throw ConfigError("adapt_zero_shot needs task = zero_shot");
  cfg.validate();
  const DomainTarget domain = zero_shot_target(target_text, text_encoder, source_words);
  return run_ablation_mode(source, domain, image_encoder, cfg, observer);
}

std::string loss_csv_header(AdaptTask task) {
  return task == AdaptTask::one_shot ? "iteration,step,total,L_dir,L_dis,L_Istr,L_Fstr"
                                     : "iteration,step,total,L_dir,L_Istr,L_Fstr";
}

std::string loss_csv_row(const LossRecord& r, AdaptTask task) {
  std::string row = std::to_string(r.iteration) + "," + std::to_string(r.step) + "," +
                    cell(r.values.total) + "," + cell(r.values.dir) + ",";
  if (task == AdaptTask::one_shot) row += cell(r.values.dis) + ",";
  row += cell(r.values.i_str) + "," + cell(r.values.f_str);
  return row;
}

}  // namespace adapter3d
