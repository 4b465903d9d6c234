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

#ifndef ADAPTER3D_RNG_HPP
#define ADAPTER3D_RNG_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

namespace adapter3d {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

// Independent stream seed for a named purpose.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

// mt19937_64 with hand-rolled uniform/normal transforms: the standard
// distributions are implementation-defined, and golden values must hold on
// every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();  // [0,1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();   // Box-Muller
  std::vector<double> normal_vector(std::size_t n, double stddev = 1.0);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace adapter3d

#endif  // ADAPTER3D_RNG_HPP
