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

#include "adapter3d/losses.hpp"

#include <atomic>
#include <cmath>

#include "adapter3d/errors.hpp"
#include "adapter3d/ops.hpp"

namespace adapter3d {

namespace {

std::atomic<std::uint64_t> g_feature_structure_calls{0};

double norm_of(const ad::Var& v) {
  double acc = 0.0;
  for (double x : v.value()) acc += x * x;
  return std::sqrt(acc);
}

void require_tokens(const TokenSequence& t, const char* who) {
  if (!t.tokens.defined() || t.tokens.rank() != 2 || t.tokens.dim(0) == 0) {
    throw ConfigError(std::string(who) + ": token sequence must be a non-empty [n,d] matrix");
  }
}

ad::Var cosine_direction_loss(const Embedding& v_b, const Embedding& v_a,
                              const DomainDirection& dv, const char* who) {
  if (v_b.dim() != v_a.dim() || v_b.dim() != dv.values.size()) {
    throw ConfigError(std::string(who) + ": embedding dimensions differ");
  }
  if (dv.degenerate || norm_of(dv.values) < kDegenerateNorm) {
    throw DegenerateError(std::string(who) + ": domain direction has collapsed to zero");
  }
  const ad::Var samp = ad::sub(v_b.values, v_a.values);
  if (norm_of(samp) < kDegenerateNorm) {
    throw DegenerateError(std::string(who) +
                          ": sample direction v_B - v_A has collapsed to zero");
  }
  const ad::Var cos = ad::dot(ad::normalize(samp), ad::normalize(dv.values));
  return ad::add_scalar(ad::scale(cos, -1.0), 1.0);
}

ad::Var one_minus(const ad::Var& x) { return ad::add_scalar(ad::scale(x, -1.0), 1.0); }

}  // namespace

DomainDirection domain_direction(const Embedding& v_tar, const Embedding& v_sou) {
  if (v_tar.dim() != v_sou.dim()) throw ConfigError("domain_direction: dimension mismatch");
  DomainDirection d{ad::sub(v_tar.values, v_sou.values).detach(), false};
  d.degenerate = norm_of(d.values) < kDegenerateNorm;
  return d;
}

ad::Var direction_loss(const Embedding& v_b, const Embedding& v_a, const DomainDirection& dv) {
  return cosine_direction_loss(v_b, v_a, dv, "direction_loss");
}

ad::Var text_direction_loss(const Embedding& v_b, const Embedding& v_a,
                            const DomainDirection& dv) {
  return cosine_direction_loss(v_b, v_a, dv, "text_direction_loss");
}

ad::Var cross_correlation_map(const TokenSequence& t_b, const TokenSequence& t_tar) {
  require_tokens(t_b, "cross_correlation_map");
  require_tokens(t_tar, "cross_correlation_map");
  if (t_b.dim() != t_tar.dim()) throw ConfigError("cross_correlation_map: token dimensions differ");
  const ad::Var nb = ad::normalize_rows(t_b.tokens);
  const ad::Var nt = ad::normalize_rows(t_tar.tokens);
  return one_minus(ad::matmul(nb, ad::transpose(nt)));
}

ad::Var remd_loss(const TokenSequence& t_b, const TokenSequence& t_tar) {
  const ad::Var m = cross_correlation_map(t_b, t_tar);
  return ad::maximum(ad::mean(ad::min_over_cols(m)), ad::mean(ad::min_over_rows(m)));
}

ad::Var self_correlation_map(const TokenSequence& t) {
  require_tokens(t, "self_correlation_map");
  const ad::Var n = ad::normalize_rows(t.tokens);
  return ad::matmul(n, ad::transpose(n));
}

ad::Var image_structure_loss(const TokenSequence& t_b, const TokenSequence& t_a) {
  require_tokens(t_b, "image_structure_loss");
  require_tokens(t_a, "image_structure_loss");
  if (t_b.count() != t_a.count()) {
    throw ConfigError("image_structure_loss: token counts differ (" + std::to_string(t_b.count()) +
                      " vs " + std::to_string(t_a.count()) + ")");
  }
  return ad::l2_norm(ad::sub(self_correlation_map(t_a), self_correlation_map(t_b)));
}

ad::Var feature_structure_loss(const FeatureImage& f_b, const FeatureImage& f_a, std::size_t t) {
  g_feature_structure_calls.fetch_add(1, std::memory_order_relaxed);
  if (!f_b.values.defined() || !f_a.values.defined() || f_b.values.shape() != f_a.values.shape()) {
    throw ConfigError("feature_structure_loss: feature images must have equal shapes");
  }
  if (f_b.values.rank() < 2) throw ConfigError("feature_structure_loss: expected [k,H,W]");
  if (t < 1) throw ConfigError("feature_structure_loss: t must be >= 1");
  const std::size_t k = f_b.values.dim(0);
  const std::size_t pixels = f_b.values.size() / k;
  const ad::Var nb = ad::normalize_rows(ad::reshape(f_b.values, {k, pixels}));
  const ad::Var na = ad::normalize_rows(ad::reshape(f_a.values, {k, pixels}));
  const ad::Var h = ad::min_over_cols(one_minus(ad::matmul(nb, ad::transpose(na))));
  return ad::mean_of_smallest(h, t);
}

std::uint64_t feature_structure_evaluations() {
  return g_feature_structure_calls.load(std::memory_order_relaxed);
}

}  // namespace adapter3d
