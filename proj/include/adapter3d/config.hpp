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

// Run configuration: INI-style `key = value` under [generator], [render],
// [adaptation], [encoder] and [metrics]; `#` starts a comment. Unknown
// sections and keys are rejected; absent keys keep their defaults.

#ifndef ADAPTER3D_CONFIG_HPP
#define ADAPTER3D_CONFIG_HPP

#include <cstdint>
#include <string>

#include "adapter3d/adaptation.hpp"
#include "adapter3d/embedding.hpp"
#include "adapter3d/generator.hpp"

namespace adapter3d {

struct MetricsConfig {
  std::size_t n = 5000;
  std::uint64_t seed = 0;
  std::size_t render_samples = 128;
};

struct RunConfig {
  GeneratorConfig generator;
  AdaptationConfig adaptation;  // adaptation.render is the [render] section
  EncoderSpec encoder;
  MetricsConfig metrics;

  void validate() const;
};

RunConfig parse_run_config(const std::string& text, const std::string& origin = "<string>");
RunConfig load_run_config(const std::string& path);
/// Every key with its resolved value; parse_run_config(format_run_config(c)) == c.
std::string format_run_config(const RunConfig& cfg);

}  // namespace adapter3d

#endif  // ADAPTER3D_CONFIG_HPP
