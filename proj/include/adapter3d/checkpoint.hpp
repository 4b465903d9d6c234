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

// Generator checkpoints.
//
//   "A3DCKPT\0" | u32 version | u32 header bytes | JSON header | payload
//
// The header carries the generator config, its digest, and a manifest of
// (name, shape, set, offset). The payload is little-endian float32 in
// manifest order with contiguous offsets.

#ifndef ADAPTER3D_CHECKPOINT_HPP
#define ADAPTER3D_CHECKPOINT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "adapter3d/generator.hpp"

namespace adapter3d {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string name;
  ad::Shape shape;
  ParamSet set;
  std::uint64_t offset = 0;  // bytes into the payload
};

struct CheckpointInfo {
  std::uint32_t format_version = 0;
  std::string config_digest;
  GeneratorConfig config;
  std::vector<CheckpointEntry> manifest;
  std::uint64_t payload_bytes = 0;
};

std::string serialize_checkpoint(const Generator& g);
void save_checkpoint(const Generator& g, const std::string& path);

/// Parses and validates the header; CheckpointError carries the byte offset.
CheckpointInfo parse_checkpoint_header(const std::string& bytes);
CheckpointInfo inspect_checkpoint(const std::string& path);

Generator deserialize_checkpoint(const std::string& bytes);
Generator load_checkpoint(const std::string& path);
/// Loads values into an existing generator; a config digest mismatch is an error.
void load_checkpoint_into(Generator& g, const std::string& path);

}  // namespace adapter3d

#endif  // ADAPTER3D_CHECKPOINT_HPP
