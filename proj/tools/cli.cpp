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

#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "adapter3d/adaptation.hpp"
#include "adapter3d/checkpoint.hpp"
#include "adapter3d/config.hpp"
#include "adapter3d/errors.hpp"
#include "adapter3d/image_io.hpp"
#include "adapter3d/metrics.hpp"

namespace adapter3d::cli {

namespace fs = std::filesystem;

namespace {

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
    v = std::stoull(text, &used, 10);
  } catch (const std::exception&) {
    throw ConfigError(what + ": '" + text + "' is not a non-negative integer");
  }
  if (used != text.size()) throw ConfigError(what + ": '" + text + "' is not a non-negative integer");
  return v;
}

// --flag, else $ADAPTER3D_SEED, else the configured value.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t configured) {
  if (flag) return *flag;
  if (const char* env = std::getenv("ADAPTER3D_SEED"); env && *env) {
    return parse_u64(env, "ADAPTER3D_SEED");
  }
  return configured;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) seeds.push_back(parse_u64(item, "--seeds"));
  if (seeds.empty()) throw ConfigError("--seeds: empty list");
  return seeds;
}

std::pair<double, double> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("--yaw-range: expected lo:hi, got '" + text + "'");
  try {
    std::size_t a = 0, b = 0;
    const std::string lo_text = text.substr(0, colon), hi_text = text.substr(colon + 1);
    const double lo = std::stod(lo_text, &a);
    const double hi = std::stod(hi_text, &b);
    if (a != lo_text.size() || b != hi_text.size()) throw std::invalid_argument(text);
    return {lo, hi};
  } catch (const std::invalid_argument&) {
    throw ConfigError("--yaw-range: cannot parse '" + text + "'");
  } catch (const std::out_of_range&) {
    throw ConfigError("--yaw-range: value out of range in '" + text + "'");
  }
}

// A config file also fixes the architecture; the checkpoint must agree with it.
RunConfig config_for(const std::string& config_path, const Generator& g) {
  if (config_path.empty()) {
    RunConfig cfg;
    cfg.generator = g.config();
    return cfg;
  }
  RunConfig cfg = load_run_config(config_path);
  if (cfg.generator.digest() != g.config().digest()) {
    throw CheckpointError("checkpoint config digest " + g.config().digest() +
                              " does not match the configured generator digest " +
                              cfg.generator.digest(),
                          0);
  }
  cfg.generator = g.config();
  return cfg;
}

std::string padded_index(std::size_t i, std::size_t count) {
  const int width = std::max<int>(2, static_cast<int>(std::to_string(count - 1).size()));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, i);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw ConfigError("short write to '" + path.string() + "'");
}

CameraPose pose_at(double yaw, double pitch, const RunConfig& cfg) {
  return CameraPose::orbit(yaw, pitch, cfg.adaptation.poses.radius);
}

// ---- init -----------------------------------------------------------------

struct InitArgs {
  std::string out, config;
  std::optional<std::uint64_t> init_seed;
};

int cmd_init(const InitArgs& a, std::ostream& out) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  cfg.generator.init_seed = resolve_seed(a.init_seed, cfg.generator.init_seed);
  const Generator g(cfg.generator);
  save_checkpoint(g, a.out);
  out << "wrote " << a.out << " (" << g.parameter_count() << " floats, digest "
      << g.config().digest() << ")\n";
  return kOk;
}

// ---- adapt ----------------------------------------------------------------

struct AdaptArgs {
  std::string source_ckpt, reference, target_text, config, mode, out_dir = "adapt_out",
                                                                   source_words;
  std::optional<std::uint64_t> seed;
};

int cmd_adapt(const AdaptArgs& a, std::ostream& out) {
  if (a.reference.empty() == a.target_text.empty()) {
    throw ConfigError("adapt: give exactly one of --reference or --target-text");
  }
  const Generator source = load_checkpoint(a.source_ckpt);
  RunConfig cfg = config_for(a.config, source);
  AdaptationConfig& ac = cfg.adaptation;
  ac.task = a.reference.empty() ? AdaptTask::zero_shot : AdaptTask::one_shot;
  if (!a.mode.empty()) ac.mode = parse_adapt_mode(a.mode);
  ac.seed = resolve_seed(a.seed, ac.seed);
  cfg.validate();

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  write_text(dir / "config.ini", format_run_config(cfg));

  std::ofstream log(dir / "loss_log.csv", std::ios::binary);
  if (!log) throw ConfigError("cannot write '" + (dir / "loss_log.csv").string() + "'");
  log << loss_csv_header(ac.task) << '\n';

  const std::size_t total_iters = ac.iters_step1 + ac.iters_step2;
  AdaptationObserver observer;
  observer.on_record = [&](const LossRecord& r) {
    log << loss_csv_row(r, ac.task) << '\n';
    log.flush();
    if (r.iteration % 25 == 0 || r.iteration + 1 == total_iters) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "iter %zu/%zu step %d total %.6g\n", r.iteration + 1,
                    total_iters, r.step, r.values.total);
      out << buf << std::flush;
    }
  };
  observer.on_step_end = [&](int step, const Generator& g) {
    save_checkpoint(g, (dir / (step == 1 ? "adapted_step1.ckpt" : "adapted_final.ckpt")).string());
  };
  observer.on_abort = [&](const Generator& g) {
    save_checkpoint(g, (dir / "adapted_last_good.ckpt").string());
  };

  const auto image_encoder = make_image_encoder(cfg.encoder);
  if (ac.task == AdaptTask::one_shot) {
    adapt_one_shot(source, read_png(a.reference), *image_encoder, ac, observer);
  } else {
    const auto text_encoder = make_text_encoder(cfg.encoder);
    const auto words =
        a.source_words.empty() ? default_source_words() : load_word_list(a.source_words);
    adapt_zero_shot(source, a.target_text, *image_encoder, *text_encoder, ac, observer, words);
  }
  out << "wrote " << dir.string() << "/{adapted_step1.ckpt,adapted_final.ckpt,loss_log.csv,config.ini}\n";
  return kOk;
}

// ---- render / sweep / interpolate -----------------------------------------

struct ViewArgs {
  std::string ckpt, config, out_dir;
  double yaw = 0.0, pitch = 0.0;
};

struct RenderArgs : ViewArgs {
  std::string seeds;
  bool grid = false;
};

int cmd_render(const RenderArgs& a, std::ostream& out) {
  const Generator g = load_checkpoint(a.ckpt);
  const RunConfig cfg = config_for(a.config, g);
  const auto seeds = parse_seed_list(a.seeds);
  const CameraPose pose = pose_at(a.yaw, a.pitch, cfg);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  std::vector<RGBImage> tiles;
  for (const std::uint64_t s : seeds) {
    const RGBImage img =
        g.generate(LatentCode::from_seed(s, g.config().z_dim), pose, cfg.adaptation.render).rgb;
    write_png((dir / ("seed_" + std::to_string(s) + ".png")).string(), img);
    if (a.grid) tiles.push_back(img);
  }
  if (a.grid) {
    const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(tiles.size()))));
    write_png((dir / "grid.png").string(), tile_grid(tiles, cols));
  }
  out << "rendered " << seeds.size() << " image(s) into " << dir.string() << "\n";
  return kOk;
}

struct SweepArgs : ViewArgs {
  std::optional<std::uint64_t> seed;
  std::size_t frames = 16;
  std::string yaw_range = "-0.6:0.6";
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  if (a.frames < 2) throw ConfigError("sweep: --frames must be at least 2");
  const auto [lo, hi] = parse_range(a.yaw_range);
  const Generator g = load_checkpoint(a.ckpt);
  const RunConfig cfg = config_for(a.config, g);
  const LatentCode z = LatentCode::from_seed(resolve_seed(a.seed, 0), g.config().z_dim);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  const double last = static_cast<double>(a.frames - 1);
  for (std::size_t i = 0; i < a.frames; ++i) {
    // lo*(n-1-i)/(n-1) + hi*i/(n-1) makes mirrored frames negate exactly.
    const double yaw = lo == hi ? lo
                                : lo * (static_cast<double>(a.frames - 1 - i) / last) +
                                      hi * (static_cast<double>(i) / last);
    const RGBImage img = g.generate(z, pose_at(yaw, a.pitch, cfg), cfg.adaptation.render).rgb;
    write_png((dir / ("frame_" + padded_index(i, a.frames) + ".png")).string(), img);
  }
  out << "wrote " << a.frames << " frames into " << dir.string() << "\n";
  return kOk;
}

struct InterpArgs : ViewArgs {
  std::uint64_t seed_a = 0, seed_b = 1;
  std::size_t steps = 8;
  std::string space = "w";
};

std::vector<double> lerp(const std::vector<double>& a, const std::vector<double>& b, double t) {
  std::vector<double> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = (1.0 - t) * a[i] + t * b[i];
  return r;
}

int cmd_interpolate(const InterpArgs& a, std::ostream& out) {
  if (a.steps < 2) throw ConfigError("interpolate: --steps must be at least 2");
  if (a.space != "w" && a.space != "z") throw ConfigError("interpolate: --space must be w or z");
  const Generator g = load_checkpoint(a.ckpt);
  const RunConfig cfg = config_for(a.config, g);
  const CameraPose pose = pose_at(a.yaw, a.pitch, cfg);
  const std::size_t zdim = g.config().z_dim;
  const LatentCode za = LatentCode::from_seed(a.seed_a, zdim);
  const LatentCode zb = LatentCode::from_seed(a.seed_b, zdim);
  const StyleVector wa = g.map_latent(za, pose);
  const StyleVector wb = g.map_latent(zb, pose);
  const auto& wav = wa.values.value();
  const auto& wbv = wb.values.value();
  const std::vector<double> wa_vec(wav.begin(), wav.end()), wb_vec(wbv.begin(), wbv.end());
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  for (std::size_t i = 0; i < a.steps; ++i) {
    StyleVector w;
    if (i == 0) {
      w = wa;
    } else if (i + 1 == a.steps) {
      w = wb;
    } else {
      const double t = static_cast<double>(i) / static_cast<double>(a.steps - 1);
      if (a.space == "w") {
        w.values = ad::Var::constant({wa_vec.size()}, lerp(wa_vec, wb_vec, t));
      } else {
        w = g.map_latent(LatentCode{lerp(za.values, zb.values, t), std::nullopt}, pose);
      }
    }
    const RGBImage img = g.generate_from_style(w, pose, cfg.adaptation.render).rgb;
    write_png((dir / ("interp_" + padded_index(i, a.steps) + ".png")).string(), img);
  }
  out << "wrote " << a.steps << " interpolation frames into " << dir.string() << "\n";
  return kOk;
}

// ---- evaluate -------------------------------------------------------------

struct EvalArgs {
  std::string source_ckpt, target_ckpt, metrics = "depth,id,intra-id", config, out, reference;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
};

int cmd_evaluate(const EvalArgs& a, std::ostream& out) {
  std::vector<std::string> names;
  {
    std::stringstream in(a.metrics);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (item != "depth" && item != "id" && item != "intra-id" && item != "remd") {
        throw ConfigError("evaluate: unknown metric '" + item + "'");
      }
      names.push_back(item);
    }
    if (names.empty()) throw ConfigError("evaluate: --metrics is empty");
  }
  const Generator source = load_checkpoint(a.source_ckpt);
  const Generator target = load_checkpoint(a.target_ckpt);
  if (source.config().digest() != target.config().digest()) {
    throw ConfigError("evaluate: source and target generators have different configs");
  }
  const RunConfig cfg = config_for(a.config, source);
  const std::size_t n = a.n.value_or(cfg.metrics.n);
  if (n == 0) throw ConfigError("evaluate: --n must be positive");
  const std::uint64_t seed = resolve_seed(a.seed, cfg.metrics.seed);
  MetricOptions opts;
  opts.poses = cfg.adaptation.poses;
  opts.render = RenderConfig::evaluation();
  opts.render.n_samples = cfg.metrics.render_samples;
  const StubFaceEmbedder embedder(cfg.encoder.seed);
  const std::string digest = source.config().digest();

  std::vector<MetricReport> reports;
  for (const auto& name : names) {
    double value = 0.0;
    if (name == "depth") {
      value = depth_metric(source, target, n, seed, opts);
    } else if (name == "id") {
      value = id_similarity(source, target, embedder, n, seed, opts);
    } else if (name == "intra-id") {
      value = intra_id(target, embedder, n, independent_pose_pairs(opts.poses), seed, opts);
    } else {
      // Target renders against the reference image, or against source renders
      // of the same latents and poses when no reference is given.
      Rng latents(derive_seed(seed, "metric-latents"));
      Rng poses(derive_seed(seed, "metric-poses"));
      std::vector<RGBImage> imgs_b, imgs_tar;
      for (std::size_t i = 0; i < n; ++i) {
        const LatentCode z{latents.normal_vector(source.config().z_dim), std::nullopt};
        const CameraPose pose = opts.poses.sample(poses);
        imgs_b.push_back(target.generate(z, pose, opts.render).rgb);
        if (a.reference.empty()) imgs_tar.push_back(source.generate(z, pose, opts.render).rgb);
      }
      if (!a.reference.empty()) imgs_tar.push_back(read_png(a.reference));
      const auto encoder = make_image_encoder(cfg.encoder);
      value = remd_set_distance(imgs_b, imgs_tar, *encoder, cfg.adaptation.token_layer);
    }
    reports.push_back({name, value, n, seed, digest});
  }
  out << metrics_table(reports);
  if (a.out.empty()) {
    out << metrics_csv(reports);
  } else {
    write_text(a.out, metrics_csv(reports));
  }
  return kOk;
}

// ---- inspect --------------------------------------------------------------

int cmd_inspect(const std::string& path, std::ostream& out) {
  const CheckpointInfo info = inspect_checkpoint(path);
  std::map<ParamSet, std::uint64_t> counts;
  std::uint64_t total = 0;
  for (const auto& e : info.manifest) {
    const std::uint64_t n = ad::numel(e.shape);
    counts[e.set] += n;
    total += n;
  }
  out << "format_version " << info.format_version << "\n";
  out << "config_digest " << info.config_digest << "\n";
  out << "parameters " << info.manifest.size() << "\n";
  char buf[64];
  for (const ParamSet s : kAllParamSets) {
    std::snprintf(buf, sizeof buf, "%-6s %12llu\n", std::string(to_string(s)).c_str(),
                  static_cast<unsigned long long>(counts[s]));
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%-6s %12llu\n", "total", static_cast<unsigned long long>(total));
  out << buf;
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"3D generator domain adaptation toolkit", "adapter3d"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "adapter3d 0.1.0");

  auto seed_option = [](CLI::App* cmd, const std::string& name, std::optional<std::uint64_t>& slot,
                        const std::string& help) {
    cmd->add_option_function<std::uint64_t>(name, [&slot](const std::uint64_t& v) { slot = v; },
                                            help + " (default: $ADAPTER3D_SEED)");
  };

  InitArgs init;
  auto* c_init = app.add_subcommand("init", "Write a freshly initialized generator checkpoint");
  c_init->add_option("--out", init.out, "Checkpoint path")->required();
  c_init->add_option("--config", init.config, "Run config (uses [generator])")->check(CLI::ExistingFile);
  seed_option(c_init, "--init-seed", init.init_seed, "Parameter initialization seed");

  AdaptArgs adapt;
  auto* c_adapt = app.add_subcommand("adapt", "One-shot or zero-shot domain adaptation");
  c_adapt->add_option("--source-ckpt", adapt.source_ckpt, "Source generator")
      ->required()
      ->check(CLI::ExistingFile);
  auto* ref = c_adapt->add_option("--reference", adapt.reference, "Reference PNG (one-shot)")
                  ->check(CLI::ExistingFile);
  auto* txt = c_adapt->add_option("--target-text", adapt.target_text, "Target prompt (zero-shot)");
  ref->excludes(txt);
  c_adapt->add_option("--config", adapt.config, "Run config")->check(CLI::ExistingFile);
  c_adapt->add_option("--mode", adapt.mode, "progressive | trid_only | g2_only | joint")
      ->check(CLI::IsMember({"progressive", "trid_only", "g2_only", "joint"}));
  c_adapt->add_option("--out-dir", adapt.out_dir, "Output directory")->capture_default_str();
  c_adapt->add_option("--source-words", adapt.source_words, "Source word list (zero-shot)")
      ->check(CLI::ExistingFile);
  seed_option(c_adapt, "--seed", adapt.seed, "Adaptation seed");

  RenderArgs render;
  auto* c_render = app.add_subcommand("render", "Render one image per latent seed");
  c_render->add_option("--ckpt", render.ckpt, "Generator checkpoint")->required()->check(CLI::ExistingFile);
  c_render->add_option("--seeds", render.seeds, "Comma-separated latent seeds")->required();
  c_render->add_option("--yaw", render.yaw, "Camera yaw (radians)")->capture_default_str();
  c_render->add_option("--pitch", render.pitch, "Camera pitch (radians)")->capture_default_str();
  c_render->add_option("--out", render.out_dir, "Output directory")->required();
  c_render->add_option("--config", render.config, "Run config")->check(CLI::ExistingFile);
  c_render->add_flag("--grid", render.grid, "Also write grid.png");

  SweepArgs sweep;
  auto* c_sweep = app.add_subcommand("sweep", "Write frames of a yaw sweep");
  c_sweep->add_option("--ckpt", sweep.ckpt, "Generator checkpoint")->required()->check(CLI::ExistingFile);
  seed_option(c_sweep, "--seed", sweep.seed, "Latent seed");
  c_sweep->add_option("--frames", sweep.frames, "Frame count")->capture_default_str();
  c_sweep->add_option("--yaw-range", sweep.yaw_range, "lo:hi in radians")->capture_default_str();
  c_sweep->add_option("--pitch", sweep.pitch, "Camera pitch (radians)")->capture_default_str();
  c_sweep->add_option("--out", sweep.out_dir, "Output directory")->required();
  c_sweep->add_option("--config", sweep.config, "Run config")->check(CLI::ExistingFile);

  InterpArgs interp;
  auto* c_interp = app.add_subcommand("interpolate", "Linear latent interpolation between two seeds");
  c_interp->add_option("--ckpt", interp.ckpt, "Generator checkpoint")->required()->check(CLI::ExistingFile);
  c_interp->add_option("--seed-a", interp.seed_a, "First latent seed")->required();
  c_interp->add_option("--seed-b", interp.seed_b, "Second latent seed")->required();
  c_interp->add_option("--steps", interp.steps, "Frame count")->capture_default_str();
  c_interp->add_option("--yaw", interp.yaw, "Camera yaw (radians)")->capture_default_str();
  c_interp->add_option("--pitch", interp.pitch, "Camera pitch (radians)")->capture_default_str();
  c_interp->add_option("--space", interp.space, "w or z")->capture_default_str();
  c_interp->add_option("--out", interp.out_dir, "Output directory")->required();
  c_interp->add_option("--config", interp.config, "Run config")->check(CLI::ExistingFile);

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "Consistency metrics of an adapted generator");
  c_eval->add_option("--source-ckpt", eval.source_ckpt, "Source generator")
      ->required()
      ->check(CLI::ExistingFile);
  c_eval->add_option("--target-ckpt", eval.target_ckpt, "Adapted generator")
      ->required()
      ->check(CLI::ExistingFile);
  c_eval->add_option("--metrics", eval.metrics, "Subset of depth,id,intra-id,remd")
      ->capture_default_str();
  c_eval->add_option_function<std::size_t>("--n", [&eval](const std::size_t& v) { eval.n = v; },
                                           "Samples per metric (default: [metrics] n)");
  seed_option(c_eval, "--seed", eval.seed, "Metric seed");
  c_eval->add_option("--config", eval.config, "Run config")->check(CLI::ExistingFile);
  c_eval->add_option("--out", eval.out, "CSV report path (default: stdout)");
  c_eval->add_option("--reference", eval.reference, "Target image for remd")->check(CLI::ExistingFile);

  std::string inspect_path;
  auto* c_inspect = app.add_subcommand("inspect", "Print a checkpoint's header summary");
  c_inspect->add_option("--ckpt", inspect_path, "Checkpoint")->required()->check(CLI::ExistingFile);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << app.version() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  }

  try {
    if (*c_init) return cmd_init(init, out);
    if (*c_adapt) return cmd_adapt(adapt, out);
    if (*c_render) return cmd_render(render, out);
    if (*c_sweep) return cmd_sweep(sweep, out);
    if (*c_interp) return cmd_interpolate(interp, out);
    if (*c_eval) return cmd_evaluate(eval, out);
    if (*c_inspect) return cmd_inspect(inspect_path, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const DegenerateError& e) {
    err << "degenerate: " << e.what() << "\n";
    return kDegenerate;
  } catch (const NumericalError& e) {
    err << "numerical: " << e.what() << "\n";
    return kNumerical;
  } catch (const CheckpointError& e) {
    err << "checkpoint: " << e.what() << "\n";
    return kCheckpoint;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace adapter3d::cli
