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

#include "adapter3d/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "adapter3d/errors.hpp"

namespace adapter3d {

namespace {

struct Binding {
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

using Table = std::vector<std::pair<std::string, std::vector<std::pair<std::string, Binding>>>>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <class T>
T parse_integer(const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("expected an integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("expected a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Binding size_key(std::size_t& ref) {
  return {[&ref](const std::string& v) { ref = parse_integer<std::size_t>(v); },
          [&ref] { return std::to_string(ref); }};
}

Binding u64_key(std::uint64_t& ref) {
  return {[&ref](const std::string& v) { ref = parse_integer<std::uint64_t>(v); },
          [&ref] { return std::to_string(ref); }};
}

Binding double_key(double& ref) {
  return {[&ref](const std::string& v) { ref = parse_double(v); }, [&ref] { return fmt(ref); }};
}

Binding bool_key(bool& ref) {
  return {[&ref](const std::string& v) { ref = parse_bool(v); },
          [&ref] { return std::string(ref ? "true" : "false"); }};
}

Table bindings(RunConfig& c) {
  auto& g = c.generator;
  auto& a = c.adaptation;
  auto& r = c.adaptation.render;
  return {
      {"generator",
       {{"z_dim", size_key(g.z_dim)},
        {"w_dim", size_key(g.w_dim)},
        {"mapping_hidden", size_key(g.mapping_hidden)},
        {"synthesis_channels", size_key(g.synthesis_channels)},
        {"synthesis_base_resolution", size_key(g.synthesis_base_resolution)},
        {"plane_resolution", size_key(g.plane_resolution)},
        {"plane_channels", size_key(g.plane_channels)},
        {"decoder_hidden", size_key(g.decoder_hidden)},
        {"feature_channels", size_key(g.feature_channels)},
        {"render_resolution", size_key(g.render_resolution)},
        {"output_resolution", size_key(g.output_resolution)},
        {"superres_channels", size_key(g.superres_channels)},
        {"init_scale", double_key(g.init_scale)},
        {"init_seed", u64_key(g.init_seed)}}},
      {"render",
       {{"n_samples", size_key(r.n_samples)},
        {"t_near", double_key(r.t_near)},
        {"t_far", double_key(r.t_far)},
        {"stratified", bool_key(r.stratified)},
        {"jitter_seed", u64_key(r.jitter_seed)}}},
      {"adaptation",
       {{"lambda_dir", double_key(a.lambda.dir)},
        {"lambda_dis", double_key(a.lambda.dis)},
        {"lambda_i_str", double_key(a.lambda.i_str)},
        {"lambda_f_str", double_key(a.lambda.f_str)},
        {"iters_step1", size_key(a.iters_step1)},
        {"iters_step2", size_key(a.iters_step2)},
        {"learning_rate", double_key(a.learning_rate)},
        {"batch_size", size_key(a.batch_size)},
        {"token_layer", size_key(a.token_layer)},
        {"t_channels", size_key(a.t_channels)},
        {"mode",
         {[&a](const std::string& v) { a.mode = parse_adapt_mode(v); },
          [&a] { return std::string(to_string(a.mode)); }}},
        {"task",
         {[&a](const std::string& v) { a.task = parse_adapt_task(v); },
          [&a] { return std::string(to_string(a.task)); }}},
        {"seed", u64_key(a.seed)},
        {"adam_beta1", double_key(a.adam.beta1)},
        {"adam_beta2", double_key(a.adam.beta2)},
        {"adam_eps", double_key(a.adam.eps)},
        {"source_samples", size_key(a.source_samples)},
        {"yaw_min", double_key(a.poses.yaw_min)},
        {"yaw_max", double_key(a.poses.yaw_max)},
        {"pitch_min", double_key(a.poses.pitch_min)},
        {"pitch_max", double_key(a.poses.pitch_max)},
        {"radius", double_key(a.poses.radius)}}},
      {"encoder",
       {{"kind",
         {[&c](const std::string& v) {
            if (v == "stub") {
              c.encoder.kind = EncoderSpec::Kind::stub;
            } else if (v == "external") {
              c.encoder.kind = EncoderSpec::Kind::external;
            } else {
              throw ConfigError("encoder.kind must be stub or external");
            }
          },
          [&c] { return std::string(c.encoder.kind == EncoderSpec::Kind::stub ? "stub" : "external"); }}},
        {"token_dim", size_key(c.encoder.token_dim)},
        {"seed", u64_key(c.encoder.seed)}}},
      {"metrics",
       {{"n", size_key(c.metrics.n)},
        {"seed", u64_key(c.metrics.seed)},
        {"render_samples", size_key(c.metrics.render_samples)}}},
  };
}

Binding* find(Table& t, const std::string& section, const std::string& key) {
  for (auto& [name, keys] : t) {
    if (name != section) continue;
    for (auto& [k, b] : keys)
      if (k == key) return &b;
  }
  return nullptr;
}

}  // namespace

void RunConfig::validate() const {
  generator.validate();
  adaptation.validate();
  encoder.validate();
  if (adaptation.token_layer != encoder.token_layer) {
    throw InternalError("encoder token layer out of sync with adaptation.token_layer");
  }
  if (metrics.n < 1) throw ConfigError("metrics.n must be >= 1");
  if (metrics.render_samples < 2) throw ConfigError("metrics.render_samples must be >= 2");
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  Table table = bindings(cfg);
  std::istringstream in(text);
  std::string line, section;
  std::set<std::string> seen;
  std::optional<std::string> preset;
  std::vector<std::pair<Binding*, std::string>> assignments;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& [name, keys] : table) known = known || name == section;
      if (!known) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    if (section.empty()) fail("key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(section + "." + key).second) fail("duplicate key " + section + "." + key);
    if (section == "adaptation" && key == "lambda_preset") {
      preset = value;
      continue;
    }
    Binding* b = find(table, section, key);
    if (!b) fail("unknown key " + section + "." + key);
    assignments.emplace_back(b, value);
  }
  try {
    // A preset sets all four weights; explicit lambda_* keys then override it.
    if (preset) cfg.adaptation.lambda = LossWeights::preset(*preset);
    for (auto& [b, value] : assignments) b->set(value);
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  cfg.encoder.token_layer = cfg.adaptation.token_layer;
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_run_config(text, path);
}

std::string format_run_config(const RunConfig& cfg) {
  RunConfig copy = cfg;
  Table table = bindings(copy);
  std::ostringstream out;
  bool first = true;
  for (auto& [name, keys] : table) {
    if (!first) out << '\n';
    first = false;
    out << '[' << name << "]\n";
    for (auto& [key, b] : keys) out << key << " = " << b.get() << '\n';
  }
  return out.str();
}

}  // namespace adapter3d
