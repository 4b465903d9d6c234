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

#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "adapter3d/errors.hpp"
#include "adapter3d/ops.hpp"
#include "adapter3d/rng.hpp"
#include "support.hpp"

namespace adapter3d {
namespace {

using ad::Var;
using testing::check_gradient;

Var random_leaf(Rng& rng, ad::Shape shape, double s = 1.0) {
  return Var::leaf(shape, rng.normal_vector(ad::numel(shape), s), true);
}

std::vector<std::size_t> all_indices(const Var& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

// Contracts the op output with a fixed random cotangent so every output
// entry contributes to the checked scalar.
void expect_gradients(std::vector<Var> leaves, const std::function<Var()>& op, double tol = 1e-6) {
  Rng rng(99);
  const Var probe = op();
  const Var cot = Var::constant(probe.shape(), rng.normal_vector(probe.size()));
  auto loss = [&]() {
    const Var out = op();
    return out.rank() == 0 ? ad::mul(out, cot) : ad::sum(ad::mul(out, cot));
  };
  for (auto& leaf : leaves) {
    const auto r = check_gradient(leaf, loss, all_indices(leaf), 1e-5);
    EXPECT_LT(r.worst_relative, tol) << "leaf of shape " << ad::shape_string(leaf.shape());
  }
}

TEST(Autograd, ElementwiseOps) {
  Rng rng(1);
  Var a = random_leaf(rng, {3, 4}), b = random_leaf(rng, {3, 4});
  expect_gradients({a, b}, [&] { return ad::add(a, b); });
  expect_gradients({a, b}, [&] { return ad::sub(a, b); });
  expect_gradients({a, b}, [&] { return ad::mul(a, b); });
  expect_gradients({a}, [&] { return ad::scale(a, -1.7); });
  expect_gradients({a}, [&] { return ad::add_scalar(a, 0.3); });
  expect_gradients({a}, [&] { return ad::square(a); });
  expect_gradients({a}, [&] { return ad::leaky_relu(a, 0.2); });
  expect_gradients({a}, [&] { return ad::softplus(a); });
}

TEST(Autograd, Reductions) {
  Rng rng(2);
  Var a = random_leaf(rng, {5}), b = random_leaf(rng, {5});
  Var s = Var::leaf({}, {0.7}, true), t = Var::leaf({}, {-0.4}, true);
  expect_gradients({a}, [&] { return ad::sum(a); });
  expect_gradients({a}, [&] { return ad::mean(a); });
  expect_gradients({a, b}, [&] { return ad::dot(a, b); });
  expect_gradients({a}, [&] { return ad::l2_norm(a); });
  expect_gradients({s, t}, [&] { return ad::maximum(s, t); });
  expect_gradients({s, t}, [&] { return ad::divide(s, t); });
}

TEST(Autograd, ShapeOps) {
  Rng rng(3);
  Var a = random_leaf(rng, {4, 3}), b = random_leaf(rng, {2, 3});
  expect_gradients({a}, [&] { return ad::reshape(a, {3, 4}); });
  expect_gradients({a, b}, [&] { return ad::concat({a, b}); });
  expect_gradients({a}, [&] { return ad::slice(a, 1, 3); });
  expect_gradients({a}, [&] { return ad::transpose(a); });
  expect_gradients({a}, [&] { return ad::gather(a, {0, 0, 5, 11, 3}, {5}); });
}

TEST(Autograd, LinearAlgebraOps) {
  Rng rng(4);
  Var a = random_leaf(rng, {3, 5}), b = random_leaf(rng, {5, 2}), bias = random_leaf(rng, {2});
  Var img = random_leaf(rng, {3, 4, 4}), cb = random_leaf(rng, {3});
  expect_gradients({a, b}, [&] { return ad::matmul(a, b); });
  expect_gradients({b, bias}, [&] { return ad::add_row_bias(b, bias); });
  expect_gradients({img, cb}, [&] { return ad::add_channel_bias(img, cb); });
  expect_gradients({a}, [&] { return ad::normalize(a); });
  expect_gradients({a}, [&] { return ad::normalize_rows(a); });
  expect_gradients({a}, [&] { return ad::mean_rows(a); });
}

TEST(Autograd, SelectionOpsAwayFromTies) {
  Var m = Var::leaf({3, 3}, {0.1, 0.5, 0.9, 0.8, 0.2, 0.6, 0.4, 0.7, 0.3}, true);
  Var v = Var::leaf({5}, {0.5, 0.1, 0.9, 0.3, 0.7}, true);
  expect_gradients({m}, [&] { return ad::min_over_cols(m); });
  expect_gradients({m}, [&] { return ad::min_over_rows(m); });
  expect_gradients({v}, [&] { return ad::mean_of_smallest(v, 3); });
  expect_gradients({v}, [&] { return ad::mean_of_smallest(v, 9); });
}

TEST(Autograd, ImageOps) {
  Rng rng(5);
  Var x = random_leaf(rng, {3, 6, 5}), w = random_leaf(rng, {2, 3, 3, 3}, 0.3);
  Var style = Var::leaf({3}, {0.9, 1.2, 1.1}, true);
  expect_gradients({x, w}, [&] { return ad::conv2d(x, w); });
  expect_gradients({w, style}, [&] { return ad::modulate(w, style, false); });
  expect_gradients({w, style}, [&] { return ad::modulate(w, style, true); });
  expect_gradients({x}, [&] { return ad::resize_bilinear(x, 11, 4); });
  Var planes_flat = random_leaf(rng, {6, 4, 4});
  expect_gradients({planes_flat}, [&] { return ad::channels_to_triplanes(planes_flat, 2); });
}

TEST(Autograd, TriplaneSamplingGradientAtNonGridPoints) {
  Rng rng(6);
  Var planes = random_leaf(rng, {3, 5, 5, 3});
  std::vector<double> c(3 * 12);
  for (auto& v : c) v = rng.uniform(-0.95, 0.95);
  const Var coords = Var::constant({12, 3}, c);
  expect_gradients({planes}, [&] { return ad::sample_triplanes(planes, coords); }, 1e-4);
}

TEST(Autograd, FusedRenderGradients) {
  Rng rng(7);
  const std::size_t M = 3, H = 6, C = 4;
  Var planes = random_leaf(rng, {3, 5, 5, M}, 0.5);
  Var w0 = random_leaf(rng, {M, H}, 0.5), b0 = random_leaf(rng, {H}, 0.5);
  Var w1 = random_leaf(rng, {H, C + 1}, 0.3), b1 = random_leaf(rng, {C + 1}, 0.3);
  ad::RenderRays rays;
  rays.count = 5;
  rays.n_samples = 12;
  for (std::size_t r = 0; r < rays.count; ++r) {
    rays.origins.insert(rays.origins.end(), {0.2 * rng.normal(), 0.2 * rng.normal(), 3.0});
    rays.directions.insert(rays.directions.end(), {0.0, 0.0, -1.0});
  }
  expect_gradients({planes, w0, b0, w1, b1},
                   [&] { return ad::render_triplanes(planes, w0, b0, w1, b1, rays); }, 1e-4);
}

TEST(Autograd, LeafGradientsAccumulateAcrossBackwardCalls) {
  Var a = Var::leaf({2}, {1.0, 2.0}, true);
  ad::backward(ad::sum(ad::scale(a, 3.0)));
  ad::backward(ad::sum(ad::scale(a, 3.0)));
  ASSERT_EQ(a.grad().size(), 2u);
  EXPECT_EQ(a.grad()[0], 6.0);
  a.zero_grad();
  EXPECT_TRUE(a.grad().empty() || a.grad()[0] == 0.0);
}

TEST(Autograd, ConstantsReceiveNoGradient) {
  Var a = Var::leaf({2}, {1.0, 2.0}, false);
  Var b = Var::leaf({2}, {3.0, 4.0}, true);
  ad::backward(ad::dot(a, b));
  EXPECT_TRUE(a.grad().empty());
  EXPECT_EQ(b.grad()[1], 2.0);
}

TEST(Autograd, ShapeErrorsNameTheOp) {
  Var a = Var::constant({2, 3}, std::vector<double>(6, 1.0));
  Var b = Var::constant({3, 2}, std::vector<double>(6, 1.0));
  try {
    ad::add(a, b);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("add"), std::string::npos);
  }
  EXPECT_THROW(ad::matmul(a, a), ConfigError);
}

TEST(Autograd, NormalizingZeroIsDegenerate) {
  EXPECT_THROW(ad::normalize(Var::zeros({4})), DegenerateError);
  Var m = Var::constant({2, 2}, {1.0, 0.0, 0.0, 0.0});
  EXPECT_THROW(ad::normalize_rows(m), DegenerateError);
}

}  // namespace
}  // namespace adapter3d
