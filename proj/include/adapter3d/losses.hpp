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

// Adaptation losses over embeddings, token sequences and feature images.
// Cosines carry no epsilon: zero vectors are rejected up front.

#ifndef ADAPTER3D_LOSSES_HPP
#define ADAPTER3D_LOSSES_HPP

#include <cstdint>

#include "adapter3d/autograd.hpp"
#include "adapter3d/embedding.hpp"
#include "adapter3d/renderer.hpp"

namespace adapter3d {

inline constexpr double kDegenerateNorm = 1e-8;

struct DomainDirection {
  ad::Var values;
  bool degenerate = false;
};

/// v_tar - v_sou, flagged degenerate when its norm is below 1e-8.
DomainDirection domain_direction(const Embedding& v_tar, const Embedding& v_sou);

/// 1 - cos(v_B - v_A, dv_dom). Throws DegenerateError naming the collapsed side.
ad::Var direction_loss(const Embedding& v_B, const Embedding& v_A, const DomainDirection& dv_dom);
/// Same contract, with the text-derived domain direction.
ad::Var text_direction_loss(const Embedding& v_B, const Embedding& v_A,
                            const DomainDirection& dv_dom_txt);

/// M[i,j] = 1 - cos(T_B[i], T_tar[j]), shape [n, m].
ad::Var cross_correlation_map(const TokenSequence& t_b, const TokenSequence& t_tar);
/// Relaxed earth mover's distance: the larger of the two mean-of-minimum
/// relaxations of the cross-correlation map.
ad::Var remd_loss(const TokenSequence& t_b, const TokenSequence& t_tar);

/// M[i,j] = cos(T[i], T[j]), shape [n, n].
ad::Var self_correlation_map(const TokenSequence& t);
/// Frobenius norm of the difference of the two self-correlation maps.
ad::Var image_structure_loss(const TokenSequence& t_b, const TokenSequence& t_a);

/// Per-channel nearest cosine distance from F_B to F_A; mean of the
/// min(t, k) smallest, lower channel index first on ties.
ad::Var feature_structure_loss(const FeatureImage& f_b, const FeatureImage& f_a, std::size_t t);

/// Number of feature_structure_loss evaluations in this process.
std::uint64_t feature_structure_evaluations();

}  // namespace adapter3d

#endif  // ADAPTER3D_LOSSES_HPP
