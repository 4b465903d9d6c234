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


#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "adapter3d/checkpoint.hpp"
#include "adapter3d/image_io.hpp"
#include "cli.hpp"
#include "support.hpp"

namespace adapter3d {
namespace {

namespace fs = std::filesystem;

constexpr const char* kTinyConfig =
    "[generator]\n"
    "z_dim = 16\nw_dim = 16\nmapping_hidden = 16\nsynthesis_channels = 8\n"
    "synthesis_base_resolution = 8\nplane_resolution = 16\nplane_channels = 4\n"
    "decoder_hidden = 16\nfeature_channels = 32\nrender_resolution = 16\n"
    "output_resolution = 32\nsuperres_channels = 8\n"
    "[render]\nn_samples = 12\n"
    "[adaptation]\niters_step1 = 2\niters_step2 = 2\nbatch_size = 2\nsource_samples = 4\n"
    "[metrics]\nn = 2\nrender_samples = 12\n";

struct Outcome {
  int code;
  std::string out, err;
};

class Cli : public ::testing::Test {
 protected:
  Cli() : dir_("cli") {
    unsetenv("ADAPTER3D_SEED");
    config_ = dir_.file("tiny.ini");
    testing::write_file(config_, kTinyConfig);
    ckpt_ = dir_.file("source.ckpt");
    const auto r = run({"init", "--out", ckpt_, "--config", config_, "--init-seed", "4"});
    EXPECT_EQ(r.code, 0) << r.err;
    Generator g = load_checkpoint(ckpt_);
    reference_ = dir_.file("reference.png");
    write_png(reference_, testing::edge_filtered_target(g));
  }

  Outcome run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
  }

  std::string path(const std::string& name) const { return dir_.file(name); }

  testing::TempDir dir_;
  std::string config_, ckpt_, reference_;
};

TEST_F(Cli, InitUsesSeedAndConfig) {
  const Generator g = load_checkpoint(ckpt_);
  EXPECT_EQ(g.config().z_dim, 16u);
  EXPECT_EQ(g.config().init_seed, 4u);
  ASSERT_EQ(run({"init", "--out", path("again.ckpt"), "--config", config_, "--init-seed", "4"}).code, 0);
  EXPECT_EQ(testing::read_file(path("again.ckpt")), testing::read_file(ckpt_));
  setenv("ADAPTER3D_SEED", "4", 1);
  ASSERT_EQ(run({"init", "--out", path("env.ckpt"), "--config", config_}).code, 0);
  unsetenv("ADAPTER3D_SEED");
  EXPECT_EQ(testing::read_file(path("env.ckpt")), testing::read_file(ckpt_));
}

TEST_F(Cli, OneShotAdaptWritesAllOutputs) {
  const auto r = run({"adapt", "--source-ckpt", ckpt_, "--reference", reference_, "--config",
                      config_, "--out-dir", path("run"), "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"adapted_step1.ckpt", "adapted_final.ckpt", "loss_log.csv", "config.ini"})
    EXPECT_TRUE(fs::exists(path("run") + "/" + f)) << f;
  const std::string log = testing::read_file(path("run/loss_log.csv"));
  EXPECT_EQ(log.substr(0, log.find('\n')), "iteration,step,total,L_dir,L_dis,L_Istr,L_Fstr");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 5);
  const std::string snapshot = testing::read_file(path("run/config.ini"));
  EXPECT_NE(snapshot.find("seed = 3"), std::string::npos);
  EXPECT_NE(snapshot.find("task = one_shot"), std::string::npos);
}

TEST_F(Cli, AdaptRerunIsBitIdentical) {
  for (const char* out : {"a", "b"}) {
    ASSERT_EQ(run({"adapt", "--source-ckpt", ckpt_, "--reference", reference_, "--config", config_,
                   "--out-dir", path(out), "--seed", "9", "--mode", "joint"})
                  .code,
              0);
  }
  EXPECT_EQ(testing::read_file(path("a/adapted_final.ckpt")),
            testing::read_file(path("b/adapted_final.ckpt")));
  EXPECT_EQ(testing::read_file(path("a/loss_log.csv")), testing::read_file(path("b/loss_log.csv")));
}

TEST_F(Cli, ZeroShotAdaptHasNoDistributionColumn) {
  const auto r = run({"adapt", "--source-ckpt", ckpt_, "--target-text", "sketch", "--config",
                      config_, "--out-dir", path("zs")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string log = testing::read_file(path("zs/loss_log.csv"));
  EXPECT_EQ(log.substr(0, log.find('\n')), "iteration,step,total,L_dir,L_Istr,L_Fstr");
}

TEST_F(Cli, AdaptExitCodes) {
  EXPECT_EQ(run({"adapt", "--source-ckpt", ckpt_, "--reference", reference_, "--target-text",
                 "sketch", "--out-dir", path("x")})
                .code,
            cli::kBadInput);
  EXPECT_EQ(run({"adapt", "--source-ckpt", ckpt_, "--config", config_, "--out-dir", path("x")}).code,
            cli::kBadInput);
  EXPECT_EQ(run({"adapt", "--source-ckpt", path("missing.ckpt"), "--target-text", "sketch"}).code,
            cli::kBadInput);
  EXPECT_EQ(run({"adapt", "--source-ckpt", ckpt_, "--target-text", "x", "--mode", "everything"}).code,
            cli::kBadInput);

  testing::write_file(path("words.txt"), "face\n");
  EXPECT_EQ(run({"adapt", "--source-ckpt", ckpt_, "--target-text", "face", "--source-words",
                 path("words.txt"), "--config", config_, "--out-dir", path("deg")})
                .code,
            cli::kDegenerate);

  testing::write_file(path("hot.ini"), std::string(kTinyConfig) + "learning_rate = 1e40\n");
  // The appended key lands in [metrics], which has no learning_rate.
  EXPECT_EQ(run({"adapt", "--source-ckpt", ckpt_, "--reference", reference_, "--config",
                 path("hot.ini"), "--out-dir", path("hot")})
                .code,
            cli::kBadInput);
}

TEST_F(Cli, NonFiniteLossExitsWithLastGoodCheckpoint) {
  std::string text = kTinyConfig;
  text.replace(text.find("[adaptation]\n"), 13, "[adaptation]\nlearning_rate = 1e40\n");
  testing::write_file(path("hot.ini"), text);
  const auto r = run({"adapt", "--source-ckpt", ckpt_, "--reference", reference_, "--config",
                      path("hot.ini"), "--out-dir", path("hot")});
  EXPECT_EQ(r.code, cli::kNumerical) << r.err;
  ASSERT_TRUE(fs::exists(path("hot/adapted_last_good.ckpt")));
  const Generator g = load_checkpoint(path("hot/adapted_last_good.ckpt"));
  for (const auto& p : g.parameters())
    for (double v : p.var.value()) ASSERT_TRUE(std::isfinite(v));
}

TEST_F(Cli, RenderWritesOnePngPerSeedDeterministically) {
  ASSERT_EQ(run({"render", "--ckpt", ckpt_, "--seeds", "1,2,3", "--yaw", "0.2", "--pitch", "-0.1",
                 "--out", path("r1"), "--config", config_})
                .code,
            0);
  ASSERT_EQ(run({"render", "--ckpt", ckpt_, "--seeds", "1,2,3", "--yaw", "0.2", "--pitch", "-0.1",
                 "--out", path("r2"), "--config", config_})
                .code,
            0);
  for (const char* f : {"seed_1.png", "seed_2.png", "seed_3.png"}) {
    EXPECT_EQ(testing::read_file(path("r1") + "/" + f), testing::read_file(path("r2") + "/" + f));
  }
  EXPECT_EQ(std::distance(fs::directory_iterator(path("r1")), fs::directory_iterator()), 3);
  EXPECT_EQ(run({"render", "--ckpt", path("nope.ckpt"), "--seeds", "1", "--out", path("r3")}).code,
            cli::kBadInput);
  EXPECT_EQ(run({"render", "--ckpt", ckpt_, "--seeds", "1,x", "--out", path("r3")}).code,
            cli::kBadInput);
}

TEST_F(Cli, RenderGridLayout) {
  ASSERT_EQ(run({"render", "--ckpt", ckpt_, "--seeds", "5,6,7,8", "--out", path("g"), "--grid",
                 "--config", config_})
                .code,
            0);
  const RGBImage grid = read_png(path("g/grid.png"));
  const RGBImage tile = read_png(path("g/seed_5.png"));
  EXPECT_EQ(grid.width(), 2 * tile.width());
  EXPECT_EQ(grid.height(), 2 * tile.height());
  EXPECT_EQ(tile.width(), 32u);
}

TEST_F(Cli, SweepFrames) {
  ASSERT_EQ(run({"sweep", "--ckpt", ckpt_, "--seed", "2", "--frames", "16", "--out", path("s"),
                 "--config", config_})
                .code,
            0);
  for (int i = 0; i < 16; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "s/frame_%02d.png", i);
    EXPECT_TRUE(fs::exists(path(name))) << name;
  }
  ASSERT_EQ(run({"sweep", "--ckpt", ckpt_, "--frames", "3", "--yaw-range", "0.3:0.3", "--out",
                 path("flat"), "--config", config_})
                .code,
            0);
  EXPECT_EQ(testing::read_file(path("flat/frame_00.png")), testing::read_file(path("flat/frame_02.png")));
  EXPECT_EQ(run({"sweep", "--ckpt", ckpt_, "--frames", "1", "--out", path("one")}).code,
            cli::kBadInput);
  EXPECT_EQ(run({"sweep", "--ckpt", ckpt_, "--yaw-range", "0.3", "--out", path("one")}).code,
            cli::kBadInput);
}

TEST_F(Cli, SweepUsesMirroredYaws) {
  ASSERT_EQ(run({"sweep", "--ckpt", ckpt_, "--seed", "2", "--frames", "4", "--yaw-range",
                 "-0.45:0.45", "--out", path("m"), "--config", config_})
                .code,
            0);
  const Generator g = load_checkpoint(ckpt_);
  RenderConfig rc;
  rc.n_samples = 12;
  const LatentCode z = LatentCode::from_seed(2, 16);
  for (int i = 0; i < 4; ++i) {
    const double yaw = -0.45 * ((3.0 - i) / 3.0) + 0.45 * (i / 3.0);
    write_png(path("expect.png"), g.generate(z, CameraPose::orbit(-yaw, 0.0), rc).rgb);
    char name[32];
    std::snprintf(name, sizeof name, "m/frame_%02d.png", 3 - i);
    EXPECT_EQ(testing::read_file(path(name)), testing::read_file(path("expect.png"))) << i;
  }
}

TEST_F(Cli, InterpolationEndpointsAndMidpoint) {
  ASSERT_EQ(run({"interpolate", "--ckpt", ckpt_, "--seed-a", "1", "--seed-b", "2", "--steps", "3",
                 "--yaw", "0.1", "--out", path("i"), "--config", config_})
                .code,
            0);
  ASSERT_EQ(run({"render", "--ckpt", ckpt_, "--seeds", "1,2", "--yaw", "0.1", "--out", path("e"),
                 "--config", config_})
                .code,
            0);
  EXPECT_EQ(testing::read_file(path("i/interp_00.png")), testing::read_file(path("e/seed_1.png")));
  EXPECT_EQ(testing::read_file(path("i/interp_02.png")), testing::read_file(path("e/seed_2.png")));

  const Generator g = load_checkpoint(ckpt_);
  RenderConfig rc;
  rc.n_samples = 12;
  const CameraPose pose = CameraPose::orbit(0.1, 0.0);
  const StyleVector sa = g.map_latent(LatentCode::from_seed(1, 16), pose);
  const StyleVector sb = g.map_latent(LatentCode::from_seed(2, 16), pose);
  const auto wa = sa.values.value();
  const auto wb = sb.values.value();
  std::vector<double> mid(wa.size());
  for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * wa[i] + 0.5 * wb[i];
  write_png(path("mid.png"),
            g.generate_from_style({ad::Var::constant({mid.size()}, mid)}, pose, rc).rgb);
  EXPECT_EQ(testing::read_file(path("i/interp_01.png")), testing::read_file(path("mid.png")));

  EXPECT_EQ(run({"interpolate", "--ckpt", ckpt_, "--seed-a", "1", "--seed-b", "2", "--steps", "1",
                 "--out", path("bad")})
                .code,
            cli::kBadInput);
}

TEST_F(Cli, EvaluateReports) {
  const auto same = run({"evaluate", "--source-ckpt", ckpt_, "--target-ckpt", ckpt_, "--metrics",
                         "depth", "--config", config_, "--seed", "1"});
  ASSERT_EQ(same.code, 0) << same.err;
  EXPECT_NE(same.out.find("\ndepth,0,2,1,"), std::string::npos) << same.out;
  EXPECT_EQ(std::count(same.out.begin(), same.out.end(), '\n'), 4);

  ASSERT_EQ(run({"adapt", "--source-ckpt", ckpt_, "--reference", reference_, "--config", config_,
                 "--out-dir", path("run")})
                .code,
            0);
  const std::vector<std::string> args{"evaluate", "--source-ckpt", ckpt_, "--target-ckpt",
                                      path("run/adapted_final.ckpt"), "--metrics",
                                      "depth,id,intra-id,remd", "--config", config_, "--n", "2",
                                      "--seed", "5"};
  const auto a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("metric,value,n,seed,config_digest"), std::string::npos);

  EXPECT_EQ(run({"evaluate", "--source-ckpt", ckpt_, "--target-ckpt", ckpt_, "--metrics", "fid"}).code,
            cli::kBadInput);
}

TEST_F(Cli, InspectSummarizesPartition) {
  const auto r = run({"inspect", "--ckpt", ckpt_});
  ASSERT_EQ(r.code, 0);
  const Generator g = load_checkpoint(ckpt_);
  EXPECT_NE(r.out.find("format_version 1\n"), std::string::npos);
  EXPECT_NE(r.out.find(std::to_string(g.parameter_count(ParamSet::TriD))), std::string::npos);
  std::istringstream in(r.out);
  std::string line;
  std::uint64_t sum = 0, total = 0;
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string key;
    std::uint64_t n = 0;
    fields >> key >> n;
    if (key == "M" || key == "G1" || key == "TriD" || key == "G2") {
      sum += n;
      ++rows;
    }
    if (key == "total") total = n;
  }
  EXPECT_EQ(rows, 4);
  EXPECT_EQ(sum, total);
  EXPECT_EQ(total, g.parameter_count());
}

TEST_F(Cli, InspectTruncatedCheckpointExitsFive) {
  const std::string bytes = testing::read_file(ckpt_);
  testing::write_file(path("cut.ckpt"), bytes.substr(0, bytes.size() / 2));
  const auto r = run({"inspect", "--ckpt", path("cut.ckpt")});
  EXPECT_EQ(r.code, cli::kCheckpoint);
  EXPECT_NE(r.err.find("offset"), std::string::npos);
}

TEST_F(Cli, ConfigDigestMismatchIsCheckpointError) {
  ASSERT_EQ(run({"init", "--out", path("big.ckpt")}).code, 0);
  EXPECT_EQ(run({"render", "--ckpt", path("big.ckpt"), "--seeds", "1", "--out", path("o"),
                 "--config", config_})
                .code,
            cli::kCheckpoint);
}

TEST_F(Cli, HelpAndVersion) {
  EXPECT_EQ(run({"--version"}).code, 0);
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({}).code, cli::kBadInput);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kBadInput);
}

}  // namespace
}  // namespace adapter3d
