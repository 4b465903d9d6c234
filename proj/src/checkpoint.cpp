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

#include "adapter3d/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

#include "adapter3d/errors.hpp"

namespace adapter3d {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'A', '3', 'D', 'C', 'K', 'P', 'T', '\0'};
constexpr std::size_t kPrefix = sizeof kMagic + 8;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

json config_to_json(const GeneratorConfig& c) {
  return {{"z_dim", c.z_dim},
          {"w_dim", c.w_dim},
          {"mapping_hidden", c.mapping_hidden},
          {"synthesis_channels", c.synthesis_channels},
          {"synthesis_base_resolution", c.synthesis_base_resolution},
          {"plane_resolution", c.plane_resolution},
          {"plane_channels", c.plane_channels},
          {"decoder_hidden", c.decoder_hidden},
          {"feature_channels", c.feature_channels},
          {"render_resolution", c.render_resolution},
          {"output_resolution", c.output_resolution},
          {"superres_channels", c.superres_channels},
          {"init_scale", c.init_scale},
          {"init_seed", c.init_seed}};
}

GeneratorConfig config_from_json(const json& j) {
  GeneratorConfig c;
  c.z_dim = j.at("z_dim").get<std::size_t>();
  c.w_dim = j.at("w_dim").get<std::size_t>();
  c.mapping_hidden = j.at("mapping_hidden").get<std::size_t>();
  c.synthesis_channels = j.at("synthesis_channels").get<std::size_t>();
  c.synthesis_base_resolution = j.at("synthesis_base_resolution").get<std::size_t>();
  c.plane_resolution = j.at("plane_resolution").get<std::size_t>();
  c.plane_channels = j.at("plane_channels").get<std::size_t>();
  c.decoder_hidden = j.at("decoder_hidden").get<std::size_t>();
  c.feature_channels = j.at("feature_channels").get<std::size_t>();
  c.render_resolution = j.at("render_resolution").get<std::size_t>();
  c.output_resolution = j.at("output_resolution").get<std::size_t>();
  c.superres_channels = j.at("superres_channels").get<std::size_t>();
  c.init_scale = j.at("init_scale").get<double>();
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void fill_values(Generator& g, const CheckpointInfo& info, const std::string& bytes,
                 std::size_t payload_start) {
  for (const auto& e : info.manifest) {
    Parameter& p = g.parameter(e.name);
    if (p.var.shape() != e.shape) {
      throw CheckpointError("parameter '" + e.name + "' has shape " + ad::shape_string(e.shape) +
                                ", generator expects " + ad::shape_string(p.var.shape()),
                            payload_start + e.offset);
    }
    auto& values = p.var.mutable_value();
    const char* src = bytes.data() + payload_start + e.offset;
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b)
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(src[4 * i + b])) << (8 * b);
      values[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
  }
}

}  // namespace

std::string serialize_checkpoint(const Generator& g) {
  json manifest = json::array();
  std::string payload;
  payload.reserve(4 * g.parameter_count());
  for (const auto& p : g.parameters()) {
    manifest.push_back({{"name", p.name},
                        {"shape", p.var.shape()},
                        {"set", std::string(to_string(p.set))},
                        {"offset", payload.size()}});
    for (double v : p.var.value()) put_u32(payload, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  const json header = {{"format_version", kCheckpointVersion},
                       {"config_digest", g.config().digest()},
                       {"generator_config", config_to_json(g.config())},
                       {"manifest", manifest},
                       {"payload_bytes", payload.size()}};
  const std::string text = header.dump();
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out += payload;
  return out;
}

void save_checkpoint(const Generator& g, const std::string& path) {
  const std::string bytes = serialize_checkpoint(g);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("short write to checkpoint '" + path + "'");
}

CheckpointInfo parse_checkpoint_header(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic) throw CheckpointError("file shorter than the magic", bytes.size());
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw CheckpointError("bad magic", 0);
  if (bytes.size() < kPrefix) throw CheckpointError("truncated prefix", bytes.size());
  CheckpointInfo info;
  info.format_version = get_u32(bytes, 8);
  if (info.format_version != kCheckpointVersion) {
    throw CheckpointError("unsupported format version " + std::to_string(info.format_version), 8);
  }
  const std::size_t header_len = get_u32(bytes, 12);
  if (bytes.size() < kPrefix + header_len) {
    throw CheckpointError("header truncated (" + std::to_string(header_len) + " bytes declared)",
                          bytes.size());
  }
  json header;
  try {
    header = json::parse(bytes.begin() + kPrefix,
                         bytes.begin() + static_cast<std::ptrdiff_t>(kPrefix + header_len));
  } catch (const json::parse_error& e) {
    throw CheckpointError(std::string("header is not valid JSON: ") + e.what(), kPrefix + e.byte);
  }
  try {
    if (header.at("format_version").get<std::uint32_t>() != info.format_version) {
      throw CheckpointError("header version disagrees with the prefix", kPrefix);
    }
    info.config_digest = header.at("config_digest").get<std::string>();
    info.config = config_from_json(header.at("generator_config"));
    info.payload_bytes = header.at("payload_bytes").get<std::uint64_t>();
    std::uint64_t expected = 0;
    for (const auto& e : header.at("manifest")) {
      CheckpointEntry entry;
      entry.name = e.at("name").get<std::string>();
      entry.shape = e.at("shape").get<ad::Shape>();
      const auto set = parse_param_set(e.at("set").get<std::string>());
      if (!set) throw CheckpointError("unknown partition set for '" + entry.name + "'", kPrefix);
      entry.set = *set;
      entry.offset = e.at("offset").get<std::uint64_t>();
      if (entry.offset != expected) {
        throw CheckpointError("manifest offsets are not contiguous at '" + entry.name + "'", kPrefix);
      }
      expected += 4 * ad::numel(entry.shape);
      info.manifest.push_back(std::move(entry));
    }
    if (expected != info.payload_bytes) throw CheckpointError("manifest does not cover the payload", kPrefix);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed header: ") + e.what(), kPrefix);
  }
  if (info.config.digest() != info.config_digest) {
    throw CheckpointError("config digest does not match the stored generator config", kPrefix);
  }
  const std::size_t end = kPrefix + header_len + info.payload_bytes;
  if (bytes.size() < end) {
    throw CheckpointError("payload truncated: expected " + std::to_string(info.payload_bytes) +
                              " bytes", bytes.size());
  }
  if (bytes.size() > end) throw CheckpointError("trailing bytes after payload", end);
  return info;
}

CheckpointInfo inspect_checkpoint(const std::string& path) {
  return parse_checkpoint_header(read_file(path));
}

Generator deserialize_checkpoint(const std::string& bytes) {
  const CheckpointInfo info = parse_checkpoint_header(bytes);
  Generator g(info.config);
  const auto names = g.parameter_names();
  if (names.size() != info.manifest.size()) {
    throw CheckpointError("manifest does not cover every generator parameter", kPrefix);
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] != info.manifest[i].name || g.parameters()[i].set != info.manifest[i].set) {
      throw CheckpointError("manifest entry " + std::to_string(i) + " ('" + info.manifest[i].name +
                                "') does not match the generator layout",
                            kPrefix);
    }
  }
  fill_values(g, info, bytes, kPrefix + get_u32(bytes, 12));
  return g;
}

Generator load_checkpoint(const std::string& path) { return deserialize_checkpoint(read_file(path)); }

void load_checkpoint_into(Generator& g, const std::string& path) {
  const std::string bytes = read_file(path);
  const CheckpointInfo info = parse_checkpoint_header(bytes);
  if (info.config_digest != g.config().digest()) {
    throw CheckpointError("checkpoint config digest " + info.config_digest +
                              " does not match generator digest " + g.config().digest(),
                          kPrefix);
  }
  fill_values(g, info, bytes, kPrefix + get_u32(bytes, 12));
}

}  // namespace adapter3d
