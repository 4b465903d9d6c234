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


// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adapter3d/adaptation.hpp"
#include "adapter3d/checkpoint.hpp"
#include "adapter3d/errors.hpp"
#include "adapter3d/image_io.hpp"
#include "adapter3d/losses.hpp"
#include "adapter3d/metrics.hpp"
#include "adapter3d/ops.hpp"
#include "cli.hpp"
#include "support.hpp"

namespace adapter3d {
namespace {

using ad::Var;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::vector<double> values_of(const Var& v) { return {v.value().begin(), v.value().end()}; }

std::vector<std::size_t> every_index(const Var& v) {
  std::vector<std::size_t> i(v.size());
  std::iota(i.begin(), i.end(), 0);
  return i;
}

std::size_t uniform_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.next_u64() % (hi - lo + 1));
}

std::vector<std::size_t> random_permutation(Rng& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.next_u64() % i]);
  return p;
}

bool gap_ok(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v.size() < 2 || v[1] - v[0] >= 1e-3;
}

// ---------------------------------------------------------------------------

Verdict remd_oracle() {
  Rng rng(101);
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = uniform_size(rng, 1, 8), m = uniform_size(rng, 1, 8);
    const std::size_t d = uniform_size(rng, 1, 16);
    const auto a = testing::random_tokens(rng, n, d), b = testing::random_tokens(rng, m, d);
    const double got = remd_loss(a, b).item();
    const double want = testing::brute_force_remd(testing::rows_of(a.tokens), testing::rows_of(b.tokens));
    worst = std::max(worst, std::fabs(got - want));
  }
  const double elapsed = seconds_since(t0);
  Verdict v;
  v.require(worst <= 1e-12, "REMD differs from brute force");
  v.require(elapsed < 5.0, "runtime over 5 s");
  v.detail = fmt("200 pairs, max |diff| %.2e, %.2f s", worst, elapsed) +
             (v.pass ? "" : " (" + v.detail + ")");
  return v;
}

struct GradTally {
  double worst = 0.0;
  std::size_t points = 0, components = 0;
  void add(const testing::GradCheck& g) {
    worst = std::max(worst, g.worst_relative);
    components += g.checked;
  }
};

GradTally grad_direction(Rng& rng) {
  GradTally t;
  for (; t.points < 20; ++t.points) {
    const std::size_t d = 16;
    Var vb = Var::leaf({d}, rng.normal_vector(d), true);
    Var va = Var::leaf({d}, rng.normal_vector(d), true);
    const DomainDirection dom{Var::constant({d}, rng.normal_vector(d))};
    auto loss = [&] { return direction_loss({vb}, {va}, dom); };
    t.add(testing::check_gradient(vb, loss, every_index(vb)));
    t.add(testing::check_gradient(va, loss, every_index(va)));
  }
  return t;
}

GradTally grad_remd(Rng& rng) {
  GradTally t;
  while (t.points < 20) {
    const std::size_t n = uniform_size(rng, 2, 8), m = uniform_size(rng, 2, 8);
    const std::size_t d = uniform_size(rng, 2, 16);
    const auto b = testing::random_tokens(rng, n, d), tar = testing::random_tokens(rng, m, d);
    const auto map = cross_correlation_map(b, tar);
    bool strict = true;
    double row_mean = 0.0, col_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double> row(map.value().begin() + i * m, map.value().begin() + (i + 1) * m);
      strict = strict && gap_ok(row);
      row_mean += *std::min_element(row.begin(), row.end()) / static_cast<double>(n);
    }
    for (std::size_t j = 0; j < m; ++j) {
      std::vector<double> col;
      for (std::size_t i = 0; i < n; ++i) col.push_back(map[i * m + j]);
      strict = strict && gap_ok(col);
      col_mean += *std::min_element(col.begin(), col.end()) / static_cast<double>(m);
    }
    if (!strict || std::fabs(row_mean - col_mean) < 1e-3) continue;
    Var lb = Var::leaf(b.tokens.shape(), values_of(b.tokens), true);
    Var lt = Var::leaf(tar.tokens.shape(), values_of(tar.tokens), true);
    auto loss = [&] { return remd_loss({lb, 3}, {lt, 3}); };
    t.add(testing::check_gradient(lb, loss, every_index(lb)));
    t.add(testing::check_gradient(lt, loss, every_index(lt)));
    ++t.points;
  }
  return t;
}

GradTally grad_image_structure(Rng& rng) {
  GradTally t;
  for (; t.points < 20; ++t.points) {
    const std::size_t n = uniform_size(rng, 2, 8), d = uniform_size(rng, 2, 16);
    const auto a = testing::random_tokens(rng, n, d), b = testing::random_tokens(rng, n, d);
    Var la = Var::leaf(a.tokens.shape(), values_of(a.tokens), true);
    Var lb = Var::leaf(b.tokens.shape(), values_of(b.tokens), true);
    auto loss = [&] { return image_structure_loss({lb, 3}, {la, 3}); };
    t.add(testing::check_gradient(lb, loss, every_index(lb)));
    t.add(testing::check_gradient(la, loss, every_index(la)));
  }
  return t;
}

GradTally grad_feature_structure(Rng& rng) {
  GradTally t;
  const std::size_t k = 6, h = 3, w = 4, hw = h * w, tc = 3;
  while (t.points < 20) {
    Var fb = Var::leaf({k, h, w}, rng.normal_vector(k * hw), true);
    Var fa = Var::leaf({k, h, w}, rng.normal_vector(k * hw), true);
    std::vector<double> nearest(k);
    bool strict = true;
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<double> dist;
      for (std::size_t j = 0; j < k; ++j) {
        double xy = 0, xx = 0, yy = 0;
        for (std::size_t p = 0; p < hw; ++p) {
          xy += fb[i * hw + p] * fa[j * hw + p];
          xx += fb[i * hw + p] * fb[i * hw + p];
          yy += fa[j * hw + p] * fa[j * hw + p];
        }
        dist.push_back(1 - xy / std::sqrt(xx * yy));
      }
      strict = strict && gap_ok(dist);
      nearest[i] = *std::min_element(dist.begin(), dist.end());
    }
    std::sort(nearest.begin(), nearest.end());
    if (!strict || nearest[tc] - nearest[tc - 1] < 1e-3) continue;
    auto loss = [&] { return feature_structure_loss({fb}, {fa}, tc); };
    t.add(testing::check_gradient(fb, loss, every_index(fb)));
    t.add(testing::check_gradient(fa, loss, every_index(fa)));
    ++t.points;
  }
  return t;
}

GradTally grad_render_ray(Rng& rng) {
  GradTally t;
  const std::size_t M = 3, H = 6, C = 4;
  for (; t.points < 20; ++t.points) {
    Var planes = Var::leaf({3, 5, 5, M}, rng.normal_vector(75 * M, 0.5), true);
    Var w0 = Var::leaf({M, H}, rng.normal_vector(M * H, 0.5), true);
    Var b0 = Var::leaf({H}, rng.normal_vector(H, 0.5), true);
    Var w1 = Var::leaf({H, C + 1}, rng.normal_vector(H * (C + 1), 0.3), true);
    Var b1 = Var::leaf({C + 1}, rng.normal_vector(C + 1, 0.3), true);
    ad::RenderRays ray;
    ray.count = 1;
    ray.n_samples = 16;
    const Vec3 target{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    const CameraPose pose = CameraPose::orbit(rng.uniform(-0.6, 0.6), rng.uniform(-0.3, 0.3));
    const Vec3 o = pose.camera_center();
    Vec3 dir{target[0] - o[0], target[1] - o[1], target[2] - o[2]};
    const double len = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
    for (auto& x : dir) x /= len;
    ray.origins.assign(o.begin(), o.end());
    ray.directions.assign(dir.begin(), dir.end());
    const Var cot = Var::constant({C + 2, 1}, rng.normal_vector(C + 2));
    auto loss = [&] { return ad::sum(ad::mul(ad::render_triplanes(planes, w0, b0, w1, b1, ray), cot)); };
    for (Var* leaf : {&planes, &w0, &b0, &w1, &b1})
      t.add(testing::check_gradient(*leaf, loss, every_index(*leaf), 1e-4, 1e-6));
  }
  return t;
}

Verdict gradient_checks() {
  Rng rng(202);
  const auto t0 = Clock::now();
  const std::vector<std::pair<std::string, std::function<GradTally(Rng&)>>> checks{
      {"L_dir", grad_direction},
      {"L_dis", grad_remd},
      {"L_I-str", grad_image_structure},
      {"L_F-str", grad_feature_structure},
      {"render_ray", grad_render_ray}};
  Verdict v;
  std::string parts;
  for (const auto& [name, fn] : checks) {
    const GradTally t = fn(rng);
    v.require(t.worst <= 1e-4 && t.points == 20, name + " gradient mismatch");
    parts += " " + name + "=" + fmt("%.1e", t.worst);
  }
  const double elapsed = seconds_since(t0);
  v.require(elapsed < 60.0, "runtime over 60 s");
  v.detail = "20 points each, worst rel err" + parts + fmt(", %.1f s", elapsed);
  return v;
}

Verdict renderer_oracle() {
  const Ray ray{{0.0, 0.0, 3.0}, {0.0, 0.0, -1.0}, 2.0, 4.0};
  RenderConfig cfg;
  cfg.n_samples = 256;
  const double sigma = 1.5;
  const std::vector<double> c{0.8, -0.4, 1.7};
  const RadianceField medium = [&](const Vec3&) { return PointSample{{}, c, sigma}; };
  const auto r = render_ray(medium, ray, cfg);
  const double opacity = 1.0 - std::exp(-sigma * (cfg.t_far - cfg.t_near));
  double worst = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i)
    worst = std::max(worst, std::fabs(r.feature[i] - c[i] * opacity) / std::fabs(c[i] * opacity));

  const RadianceField vacuum = [&](const Vec3&) { return PointSample{{}, c, 0.0}; };
  const auto e = render_ray(vacuum, ray, cfg);
  bool zero = true;
  for (double f : e.feature) zero = zero && f == 0.0;

  Verdict v;
  v.require(worst <= 1e-3, "homogeneous medium off the closed form");
  v.require(zero, "vacuum feature is not zero");
  v.require(e.depth == cfg.t_far, "vacuum depth is not t_far");
  v.detail = fmt("homogeneous rel err %.2e, vacuum depth %.17g", worst, e.depth);
  return v;
}

std::set<ParamSet> changed_sets(const Generator& source, const Generator& target) {
  std::set<ParamSet> out;
  for (auto s : kAllParamSets)
    if (source.parameter_hash(s) != target.parameter_hash(s)) out.insert(s);
  return out;
}

std::string set_names(const std::set<ParamSet>& s) {
  std::string out = "{";
  for (auto p : s) out += (out.size() > 1 ? "," : "") + std::string(to_string(p));
  return out + "}";
}

const std::map<AdaptMode, std::set<ParamSet>>& documented_sets() {
  static const std::map<AdaptMode, std::set<ParamSet>> sets{
      {AdaptMode::progressive, {ParamSet::TriD, ParamSet::G2}},
      {AdaptMode::trid_only, {ParamSet::TriD}},
      {AdaptMode::g2_only, {ParamSet::G2}},
      {AdaptMode::joint, {ParamSet::TriD, ParamSet::G2}}};
  return sets;
}

struct ModeRuns {
  std::map<AdaptMode, AdaptationResult> results;
  std::uint64_t source_hash_before = 0, source_hash_after = 0;
  AdaptationConfig cfg;
};

ModeRuns run_modes(AdaptTask task) {
  const Generator source(testing::tiny_generator_config());
  const StubImageEncoder image;
  const StubTextEncoder text;
  ModeRuns runs;
  runs.cfg = testing::tiny_adaptation_config();
  runs.cfg.task = task;
  runs.cfg.iters_step1 = runs.cfg.iters_step2 = 3;
  runs.source_hash_before = source.parameter_hash();
  const RGBImage ref = testing::edge_filtered_target(source);
  for (const auto& [mode, sets] : documented_sets()) {
    AdaptationConfig cfg = runs.cfg;
    cfg.mode = mode;
    runs.results.emplace(mode, task == AdaptTask::one_shot
                                   ? adapt_one_shot(source, ref, image, cfg)
                                   : adapt_zero_shot(source, "sketch", image, text, cfg));
  }
  runs.source_hash_after = source.parameter_hash();
  return runs;
}

Verdict check_freeze(const ModeRuns& runs) {
  const Generator source(testing::tiny_generator_config());
  Verdict v;
  std::string parts;
  for (const auto& [mode, sets] : documented_sets()) {
    const auto got = changed_sets(source, runs.results.at(mode).target);
    v.require(got == sets, std::string(to_string(mode)) + " changed " + set_names(got));
    parts += " " + std::string(to_string(mode)) + "=" + set_names(got);
  }
  v.require(runs.source_hash_before == runs.source_hash_after, "source generator mutated");
  if (v.pass) v.detail = "changed:" + parts;
  return v;
}

Verdict check_step2_omission(const ModeRuns& runs) {
  Verdict v;
  std::uint64_t step1 = 0, step2 = 0, step2_backward = 0;
  for (const auto& [mode, r] : runs.results) {
    step1 += r.probes.feature_structure_evals[0];
    step2 += r.probes.feature_structure_evals[1];
    step2_backward += r.probes.backward_passes[1];
    v.require(r.probes.feature_structure_evals[1] == 0,
              std::string(to_string(mode)) + " evaluated L_F-str in step 2");
    for (const auto& rec : r.history)
      v.require(rec.values.f_str.has_value() == (rec.step == 1), "record/step mismatch for L_F-str");
  }
  const auto& prog = runs.results.at(AdaptMode::progressive);
  v.require(prog.probes.feature_structure_evals[0] == runs.cfg.iters_step1 * runs.cfg.batch_size,
            "step-1 probe count wrong");
  v.require(prog.probes.backward_passes[1] > 0, "step 2 never ran");
  if (v.pass) {
    v.detail = "L_F-str evals step1=" + std::to_string(step1) + " step2=" + std::to_string(step2) +
               " (step-2 backward passes " + std::to_string(step2_backward) + ")";
  }
  return v;
}

Verdict freeze_contracts() { return check_freeze(run_modes(AdaptTask::one_shot)); }
Verdict step2_omission() { return check_step2_omission(run_modes(AdaptTask::one_shot)); }

Verdict toy_adaptation() {
  const auto t0 = Clock::now();
  const Generator source;
  const StubImageEncoder encoder;
  AdaptationConfig cfg;
  cfg.lambda = LossWeights::preset("default");
  cfg.learning_rate = 0.0025;
  cfg.batch_size = 16;
  cfg.iters_step1 = 200;
  cfg.iters_step2 = 200;
  cfg.source_samples = 64;
  const auto r = adapt_one_shot(source, testing::edge_filtered_target(source), encoder, cfg);
  const double elapsed = seconds_since(t0);
  const double first = r.history.front().values.total, last = r.history.back().values.total;
  Verdict v;
  v.require(last <= 0.5 * first, "final loss above half the initial loss");
  v.require(elapsed < 600.0, "runtime over 10 min");
  v.detail = fmt("initial %.4f final %.4f ratio %.3f", first, last, last / first) +
             fmt(", %.0f s", elapsed);
  return v;
}

Verdict metric_identities() {
  const Generator g(testing::tiny_generator_config());
  MetricOptions opts;
  opts.render.n_samples = 32;
  const StubFaceEmbedder embedder;
  const double depth = depth_metric(g, g, 4, 1, opts);
  const double id = id_similarity(g, g, embedder, 4, 2, opts);
  const PosePairSampler duplicated = [](Rng& rng) {
    const CameraPose p = PoseDistribution{}.sample(rng);
    return std::pair{p, p};
  };
  const double intra = intra_id(g, embedder, 4, duplicated, 3, opts);

  const auto d = render_image(g.decoder(),
                              g.synthesize_triplanes(g.map_latent(LatentCode::from_seed(5, 16),
                                                                  CameraPose::orbit(0.2, 0.0))),
                              CameraPose::orbit(0.2, 0.0), opts.render, 16)
                     .depth;
  const double offset = 0.5;
  std::vector<double> shifted = values_of(d.values);
  for (auto& x : shifted) x -= offset;
  const double mse = depth_mse(d, {Var::constant(d.values.shape(), shifted)});

  Verdict v;
  v.require(depth == 0.0, "depth_metric(G,G) != 0");
  v.require(std::fabs(id - 1.0) <= 1e-6, "id_similarity(G,G) != 1");
  v.require(std::fabs(intra - 1.0) <= 1e-6, "intra_id with duplicated poses != 1");
  v.require(mse == offset * offset, "constant-offset MSE != offset^2");
  v.detail = fmt("depth %.1e, 1-id %.1e, 1-intra %.1e", depth, 1.0 - id, 1.0 - intra) +
             fmt(", offset MSE %.17g", mse);
  return v;
}

Verdict invariance_suite() {
  Rng rng(808);
  int dir_ok = 0, remd_ok = 0, self_ok = 0, fstr_ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 16;
    const auto a = rng.normal_vector(d), b = rng.normal_vector(d), dv = rng.normal_vector(d);
    const double s1 = std::exp(rng.uniform(-3, 3)), s2 = std::exp(rng.uniform(-3, 3));
    std::vector<double> bs(d), ds(d);
    for (std::size_t i = 0; i < d; ++i) {
      bs[i] = a[i] + s1 * (b[i] - a[i]);
      ds[i] = s2 * dv[i];
    }
    const Embedding ea{Var::constant({d}, a)};
    const double base =
        direction_loss({Var::constant({d}, b)}, ea, {Var::constant({d}, dv)}).item();
    const double scaled =
        direction_loss({Var::constant({d}, bs)}, ea, {Var::constant({d}, ds)}).item();
    dir_ok += std::fabs(scaled - base) <= 1e-6 * std::max(1.0, std::fabs(base));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = uniform_size(rng, 1, 16);
    const auto x = testing::random_tokens(rng, uniform_size(rng, 1, 8), dim);
    const auto y = testing::random_tokens(rng, uniform_size(rng, 1, 8), dim);
    remd_ok += std::fabs(remd_loss(x, y).item() - remd_loss(y, x).item()) <= 1e-12;
  }
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = uniform_size(rng, 1, 6), dim = uniform_size(rng, 2, 16);
    const auto t = testing::random_tokens(rng, n, dim);
    const auto perm = random_permutation(rng, n);
    std::vector<std::size_t> idx;
    for (std::size_t p : perm)
      for (std::size_t j = 0; j < dim; ++j) idx.push_back(p * dim + j);
    const auto m = self_correlation_map(t);
    const auto pm = self_correlation_map({ad::gather(t.tokens, idx, {n, dim}), t.layer});
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        ok = ok && std::fabs(pm[i * n + j] - m[perm[i] * n + perm[j]]) <= 1e-12;
    self_ok += ok;
  }
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = uniform_size(rng, 2, 12), h = 3, w = 3, hw = h * w;
    const std::size_t t = uniform_size(rng, 1, k);
    const Var fb = Var::constant({k, h, w}, rng.normal_vector(k * hw));
    const Var fa = Var::constant({k, h, w}, rng.normal_vector(k * hw));
    const auto perm = random_permutation(rng, k);
    std::vector<std::size_t> idx;
    for (std::size_t p : perm)
      for (std::size_t j = 0; j < hw; ++j) idx.push_back(p * hw + j);
    const double base = feature_structure_loss({fb}, {fa}, t).item();
    const double permuted = feature_structure_loss({fb}, {ad::gather(fa, idx, {k, h, w})}, t).item();
    fstr_ok += std::fabs(base - permuted) <= 1e-12;
  }
  Verdict v;
  v.require(dir_ok == 100, "direction-loss scale invariance");
  v.require(remd_ok == 100, "REMD symmetry");
  v.require(self_ok == 100, "self-correlation permutation equivariance");
  v.require(fstr_ok == 100, "feature-structure channel permutation invariance");
  v.detail = "passed trials: dir-scale " + std::to_string(dir_ok) + "/100, remd-sym " +
             std::to_string(remd_ok) + "/100, self-corr-perm " + std::to_string(self_ok) +
             "/100, fstr-perm " + std::to_string(fstr_ok) + "/100";
  return v;
}

constexpr const char* kTinyRunConfig =
    "[generator]\n"
    "z_dim = 16\nw_dim = 16\nmapping_hidden = 16\nsynthesis_channels = 8\n"
    "synthesis_base_resolution = 8\nplane_resolution = 16\nplane_channels = 4\n"
    "decoder_hidden = 16\nfeature_channels = 32\nrender_resolution = 16\n"
    "output_resolution = 32\nsuperres_channels = 8\n"
    "[render]\nn_samples = 12\n"
    "[adaptation]\niters_step1 = 3\niters_step2 = 3\nbatch_size = 2\nsource_samples = 4\n";

Verdict reproducibility() {
  testing::TempDir dir("acceptance-repro");
  testing::write_file(dir.file("run.ini"), kTinyRunConfig);
  std::ostringstream sink;
  Verdict v;
  auto cli = [&](const std::vector<std::string>& args) {
    const int code = cli::run(args, sink, sink);
    v.require(code == 0, "cli exited with " + std::to_string(code));
  };
  cli({"init", "--out", dir.file("source.ckpt"), "--config", dir.file("run.ini"), "--init-seed", "2"});
  write_png(dir.file("ref.png"), testing::edge_filtered_target(load_checkpoint(dir.file("source.ckpt"))));
  for (const char* out : {"a", "b"}) {
    cli({"adapt", "--source-ckpt", dir.file("source.ckpt"), "--reference", dir.file("ref.png"),
         "--config", dir.file("run.ini"), "--seed", "17", "--out-dir", dir.file(out)});
  }
  if (!v.pass) return v;
  for (const char* f : {"adapted_step1.ckpt", "adapted_final.ckpt", "loss_log.csv", "config.ini"}) {
    v.require(testing::read_file(dir.file(std::string("a/") + f)) ==
                  testing::read_file(dir.file(std::string("b/") + f)),
              std::string(f) + " differs between runs");
  }
  const std::string bytes = testing::read_file(dir.file("a/adapted_final.ckpt"));
  const Generator g = deserialize_checkpoint(bytes);
  v.require(serialize_checkpoint(g) == bytes, "checkpoint round-trip changed bytes");
  save_checkpoint(g, dir.file("again.ckpt"));
  v.require(load_checkpoint(dir.file("again.ckpt")).parameter_hash() == g.parameter_hash(),
            "reloaded parameters differ");
  if (v.pass) {
    v.detail = "two CLI runs bit-identical (checkpoints, loss log, config); round-trip of " +
               std::to_string(bytes.size()) + " bytes exact";
  }
  return v;
}

Verdict zero_shot_parity() {
  Verdict v;
  v.require(default_source_words().size() == 50, "packaged source word list is not 50 words");
  const ModeRuns runs = run_modes(AdaptTask::zero_shot);
  for (const auto& [mode, r] : runs.results) {
    v.require(r.history.size() == runs.cfg.iters_step1 + runs.cfg.iters_step2,
              std::string(to_string(mode)) + " did not run to completion");
    for (const auto& rec : r.history)
      v.require(!rec.values.dis.has_value(), "zero-shot record carries L_dis");
  }
  v.require(loss_csv_header(AdaptTask::zero_shot).find("L_dis") == std::string::npos,
            "zero-shot CSV has an L_dis column");
  const Verdict freeze = check_freeze(runs), omission = check_step2_omission(runs);
  v.require(freeze.pass, "freeze: " + freeze.detail);
  v.require(omission.pass, "step-2 omission: " + omission.detail);
  if (v.pass) v.detail = "50 source words; no L_dis column; " + freeze.detail + "; " + omission.detail;
  return v;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Verdict()> run;
};

}  // namespace
}  // namespace adapter3d

int main(int argc, char** argv) {
  using namespace adapter3d;
  CLI::App app{"adapter3d acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "Run just these criterion numbers");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "REMD oracle equivalence", remd_oracle},
      {2, "Gradient checks", gradient_checks},
      {3, "Renderer analytic oracle", renderer_oracle},
      {4, "Freeze contracts", freeze_contracts},
      {5, "Step-2 omission", step2_omission},
      {6, "Toy adaptation progress", toy_adaptation},
      {7, "Metric identities", metric_identities},
      {8, "Invariance suite", invariance_suite},
      {9, "Reproducibility", reproducibility},
      {10, "Zero-shot parity", zero_shot_parity},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("%s  %2d  %-26s %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
