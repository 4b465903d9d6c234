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

#ifndef ADAPTER3D_TESTS_SUPPORT_HPP
#define ADAPTER3D_TESTS_SUPPORT_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "adapter3d/adaptation.hpp"
#include "adapter3d/embedding.hpp"
#include "adapter3d/generator.hpp"

namespace adapter3d::testing {

// A small generator that keeps adaptation tests in the sub-second range.
GeneratorConfig tiny_generator_config();
AdaptationConfig tiny_adaptation_config();

// Sobel edge magnitude of a grayscale source render, mapped to [-1,1] with
// edges dark, replicated on three channels.
RGBImage edge_filtered_target(const Generator& g, std::uint64_t seed = 7);

// Random [n, d] token matrix with rows bounded away from zero.
TokenSequence random_tokens(Rng& rng, std::size_t n, std::size_t d, std::size_t layer = 3);
RGBImage random_image(Rng& rng, std::size_t h, std::size_t w, double amplitude = 1.0);

// Brute-force relaxed EMD: explicit double loops, no shared code with the library.
double brute_force_remd(const std::vector<std::vector<double>>& a,
                        const std::vector<std::vector<double>>& b);
std::vector<std::vector<double>> rows_of(const ad::Var& m);

struct GradCheck {
  double worst_relative = 0.0;
  std::size_t checked = 0;
};

// Central differences of `loss` against the accumulated gradient of `leaf`
// at the listed indices. `loss` must rebuild the graph from the leaf values.
GradCheck check_gradient(ad::Var& leaf, const std::function<ad::Var()>& loss,
                         const std::vector<std::size_t>& indices, double step = 1e-4,
                         double floor = 1e-8);

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace adapter3d::testing

#endif  // ADAPTER3D_TESTS_SUPPORT_HPP
