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

#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace adapter3d::testing {

GeneratorConfig tiny_generator_config() {
  GeneratorConfig c;
  c.z_dim = 16;
  c.w_dim = 16;
  c.mapping_hidden = 16;
  c.synthesis_channels = 8;
  c.synthesis_base_resolution = 8;
  c.plane_resolution = 16;
  c.plane_channels = 4;
  c.decoder_hidden = 16;
  c.feature_channels = 32;
  c.render_resolution = 16;
  c.output_resolution = 32;
  c.superres_channels = 8;
  return c;
}

AdaptationConfig tiny_adaptation_config() {
  AdaptationConfig a;
  a.iters_step1 = 2;
  a.iters_step2 = 2;
  a.batch_size = 2;
  a.source_samples = 4;
  a.render.n_samples = 12;
  return a;
}

RGBImage edge_filtered_target(const Generator& g, std::uint64_t seed) {
  const auto src =
      g.generate(LatentCode::from_seed(seed, g.config().z_dim), CameraPose::orbit(0.0, 0.0),
                 RenderConfig::training())
          .rgb;
  const long h = static_cast<long>(src.height()), w = static_cast<long>(src.width());
  const std::size_t plane = static_cast<std::size_t>(h * w);
  std::vector<double> gray(plane);
  for (std::size_t i = 0; i < plane; ++i)
    gray[i] = (src.pixels[i] + src.pixels[plane + i] + src.pixels[2 * plane + i]) / 3.0;
  auto at = [&](long y, long x) {
    y = std::clamp(y, 0L, h - 1);
    x = std::clamp(x, 0L, w - 1);
    return gray[static_cast<std::size_t>(y * w + x)];
  };
  std::vector<double> mag(plane);
  double peak = 0.0;
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      const double gx = at(y - 1, x + 1) + 2 * at(y, x + 1) + at(y + 1, x + 1) - at(y - 1, x - 1) -
                        2 * at(y, x - 1) - at(y + 1, x - 1);
      const double gy = at(y + 1, x - 1) + 2 * at(y + 1, x) + at(y + 1, x + 1) - at(y - 1, x - 1) -
                        2 * at(y - 1, x) - at(y - 1, x + 1);
      const auto i = static_cast<std::size_t>(y * w + x);
      mag[i] = std::hypot(gx, gy);
      peak = std::max(peak, mag[i]);
    }
  }
  if (peak == 0.0) throw std::runtime_error("edge_filtered_target: flat source render");
  std::vector<double> out(3 * plane);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = 1.0 - 2.0 * mag[i] / peak;
  return {ad::Var::constant({3, src.height(), src.width()}, std::move(out))};
}

TokenSequence random_tokens(Rng& rng, std::size_t n, std::size_t d, std::size_t layer) {
  std::vector<double> v(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        v[i * d + j] = rng.normal();
        norm += v[i * d + j] * v[i * d + j];
      }
    } while (norm < 1e-2);
  }
  return {ad::Var::constant({n, d}, std::move(v)), layer};
}

RGBImage random_image(Rng& rng, std::size_t h, std::size_t w, double amplitude) {
  std::vector<double> v(3 * h * w);
  for (auto& x : v) x = rng.uniform(-amplitude, amplitude);
  return {ad::Var::constant({3, h, w}, std::move(v))};
}

std::vector<std::vector<double>> rows_of(const ad::Var& m) {
  std::vector<std::vector<double>> rows(m.dim(0));
  const std::size_t d = m.dim(1);
  for (std::size_t i = 0; i < rows.size(); ++i)
    rows[i].assign(m.value().begin() + static_cast<long>(i * d),
                   m.value().begin() + static_cast<long>((i + 1) * d));
  return rows;
}

double brute_force_remd(const std::vector<std::vector<double>>& a,
                        const std::vector<std::vector<double>>& b) {
  auto cos_dist = [](const std::vector<double>& x, const std::vector<double>& y) {
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      xy += x[k] * y[k];
      xx += x[k] * x[k];
      yy += y[k] * y[k];
    }
    return 1.0 - xy / (std::sqrt(xx) * std::sqrt(yy));
  };
  double row_mean = 0.0;
  for (const auto& x : a) {
    double best = INFINITY;
    for (const auto& y : b) best = std::min(best, cos_dist(x, y));
    row_mean += best;
  }
  row_mean /= static_cast<double>(a.size());
  double col_mean = 0.0;
  for (const auto& y : b) {
    double best = INFINITY;
    for (const auto& x : a) best = std::min(best, cos_dist(x, y));
    col_mean += best;
  }
  col_mean /= static_cast<double>(b.size());
  return std::max(row_mean, col_mean);
}

GradCheck check_gradient(ad::Var& leaf, const std::function<ad::Var()>& loss,
                         const std::vector<std::size_t>& indices, double step, double floor) {
  leaf.zero_grad();
  ad::backward(loss());
  const std::vector<double> analytic(leaf.grad().begin(), leaf.grad().end());
  GradCheck out;
  auto& values = leaf.mutable_value();
  for (std::size_t i : indices) {
    const double saved = values[i];
    values[i] = saved + step;
    const double up = loss().item();
    values[i] = saved - step;
    const double down = loss().item();
    values[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic.empty() ? 0.0 : analytic[i];
    const double scale = std::max({std::fabs(numeric), std::fabs(a), floor});
    out.worst_relative = std::max(out.worst_relative, std::fabs(numeric - a) / scale);
    ++out.checked;
  }
  return out;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("adapter3d_" + tag + "_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
}

}  // namespace adapter3d::testing
