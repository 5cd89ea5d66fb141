// Copyright 2026 The revsim Authors
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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "json.hpp"
#include "revsim/cli/cli.hpp"
#include "revsim/metrics/geometry.hpp"
#include "revsim/scenario/io.hpp"

namespace revsim::cli
{
namespace
{

namespace fs = std::filesystem;

struct Result
{
  int code = 0;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args)
{
  args.insert(args.begin(), "revsim");
  std::vector<const char *> argv;
  for (const auto & a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path & p) { return scenario::read_file(p); }

std::vector<std::string> listing(const fs::path & dir)
{
  std::vector<std::string> names;
  for (const auto & e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

void expect_same_tree(const fs::path & a, const fs::path & b)
{
  ASSERT_EQ(listing(a), listing(b));
  for (const auto & name : listing(a)) EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
}

/// A small model config so the CLI tests stay quick.
fs::path small_config(const fs::path & dir, int hidden = 16)
{
  const auto path = dir / ("small_" + std::to_string(hidden) + ".json");
  nlohmann::json j;
  j["model"] = {{"hidden_dim", hidden}, {"num_heads", 2}, {"num_encoder_layers", 1},
                {"num_decoder_blocks", 1}, {"fourier_bands", 4}, {"log_interval", 5},
                {"warmup_steps", 2}};
  std::ofstream(path) << j.dump(2);
  return path;
}

/// Synth data plus a briefly trained small checkpoint, shared by the tests.
struct Workspace
{
  fs::path root, data, model;
};

const Workspace & workspace()
{
  static const Workspace ws = [] {
    Workspace w;
    w.root = test::temp_dir("cli_ws");
    w.data = w.root / "data";
    w.model = w.root / "model";
    EXPECT_EQ(cli({"synth", "--num", "3", "--seed", "7", "--out", w.data.string()}).code, 0);
    const auto cfg = small_config(w.root);
    EXPECT_EQ(cli({"train", "--config", cfg.string(), "--data", w.data.string(), "--out",
                   w.model.string(), "--steps", "10"}).code,
              0);
    return w;
  }();
  return ws;
}

TEST(CliSynth, WritesFilesAndManifest)
{
  const auto dir = test::temp_dir("cli_synth");
  const auto r = cli({"synth", "--num", "8", "--seed", "7", "--out", (dir / "d").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto names = listing(dir / "d");
  EXPECT_EQ(names.size(), 9u);
  const auto manifest = nlohmann::json::parse(slurp(dir / "d" / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 7);
  EXPECT_EQ(manifest["files"].size(), 8u);
  for (const auto & f : manifest["files"]) {
    EXPECT_NO_THROW(scenario::load_scenario(dir / "d" / f.get<std::string>()));
  }
  ASSERT_EQ(cli({"synth", "--num", "8", "--seed", "7", "--out", (dir / "e").string()}).code, 0);
  expect_same_tree(dir / "d", dir / "e");
}

TEST(CliSynth, BadArgumentsAndIo)
{
  const auto dir = test::temp_dir("cli_synth_bad");
  EXPECT_EQ(cli({"synth", "--num", "0", "--out", (dir / "x").string()}).code, kUsage);
  EXPECT_EQ(cli({"synth", "--num", "abc", "--out", (dir / "x").string()}).code, kUsage);
  EXPECT_EQ(cli({"synth", "--num", "2"}).code, kUsage);
  EXPECT_EQ(cli({}).code, kUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kUsage);
  std::ofstream(dir / "file") << "x";
  EXPECT_EQ(cli({"synth", "--num", "1", "--out", (dir / "file" / "sub").string()}).code, kIo);
}

TEST(CliHelp, EveryCommandDocumentsItsFlags)
{
  const std::vector<std::pair<std::string, std::vector<std::string>>> cmds = {
      {"synth", {"--num", "--seed", "--out", "--config", "--jobs"}},
      {"tokenize", {"--scenario", "--direction", "--out", "--config"}},
      {"train", {"--data", "--steps", "--lr", "--batch-size", "--grad-check", "--seed", "--config"}},
      {"generate", {"--checkpoint", "--scenario", "--data", "--num-modes", "--mode", "--max-resamples",
                    "--top-p", "--temperature", "--jobs", "--seed", "--out"}},
      {"evaluate", {"--pred", "--gt", "--out", "--jobs"}},
      {"plot", {"--scenario", "--out", "--stride", "--adv-id"}},
  };
  for (const auto & [cmd, flags] : cmds) {
    const auto r = cli({cmd, "--help"});
    EXPECT_EQ(r.code, 0) << cmd;
    for (const auto & f : flags) EXPECT_NE(r.out.find(f), std::string::npos) << cmd << " " << f;
  }
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(CliTokenize, JsonLinesPerAgentAndDirection)
{
  const auto & ws = workspace();
  const auto file = ws.data / "synth_7_0.json";
  const auto s = scenario::load_scenario(file);
  const auto r = cli({"tokenize", "--scenario", file.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j["direction"] == "forward" || j["direction"] == "reverse");
    EXPECT_EQ(j["tokens"].size(), j["contour_errors"].size());
    ++count;
  }
  EXPECT_EQ(count, 2 * static_cast<int>(s.agents.size()));
  EXPECT_EQ(cli({"tokenize", "--scenario", (ws.root / "nope.json").string()}).code, kIo);
}

TEST(CliTrain, WritesArtifactsAndIsDeterministic)
{
  const auto & ws = workspace();
  for (const char * f : {"model.ckpt", "train_log.csv", "run_config.json"}) {
    EXPECT_TRUE(fs::exists(ws.model / f)) << f;
  }
  const auto dir = test::temp_dir("cli_train");
  const auto cfg = small_config(dir);
  const auto r = cli({"train", "--config", cfg.string(), "--data", ws.data.string(), "--out",
                      (dir / "m").string(), "--steps", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("final_loss"), std::string::npos);
  EXPECT_NE(r.out.find("perplexity"), std::string::npos);
  EXPECT_EQ(slurp(ws.model / "model.ckpt"), slurp(dir / "m" / "model.ckpt"));
  EXPECT_EQ(slurp(ws.model / "train_log.csv"), slurp(dir / "m" / "train_log.csv"));
  const auto rc = nlohmann::json::parse(slurp(dir / "m" / "run_config.json"));
  auto a = rc;
  auto b = nlohmann::json::parse(slurp(ws.model / "run_config.json"));
  a.erase("out");
  b.erase("out");
  EXPECT_EQ(a, b);
  EXPECT_EQ(rc["model"]["train_steps"], 10);  // flag overrides config
  EXPECT_EQ(rc["model"]["hidden_dim"], 16);   // config overrides default
}

TEST(CliTrain, UsageErrorsAndGradCheckGate)
{
  const auto dir = test::temp_dir("cli_train_bad");
  EXPECT_EQ(cli({"train", "--data", (dir / "missing").string(), "--out", (dir / "m").string()}).code, kUsage);
  fs::create_directories(dir / "empty");
  EXPECT_EQ(cli({"train", "--data", (dir / "empty").string(), "--out", (dir / "m").string()}).code, kUsage);
  std::ofstream(dir / "bad.json") << R"({"model": {"hidden_dims": 3}})";
  EXPECT_EQ(cli({"train", "--config", (dir / "bad.json").string(), "--data", workspace().data.string(),
                 "--out", (dir / "m").string()}).code,
            kUsage);
  const auto cfg = small_config(dir);
  const auto r = cli({"train", "--config", cfg.string(), "--data", workspace().data.string(), "--out",
                      (dir / "g").string(), "--steps", "2", "--grad-check"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("grad check:", 0), 0u);
}

TEST(CliGenerate, SixModesAttackSuccessAndReplayFidelity)
{
  const auto & ws = workspace();
  const auto dir = test::temp_dir("cli_gen");
  const auto input = ws.data / "synth_7_1.json";
  const auto r = cli({"generate", "--checkpoint", (ws.model / "model.ckpt").string(), "--scenario",
                      input.string(), "--num-modes", "6", "--mode", "replay", "--seed", "3", "--out",
                      (dir / "a").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("attack_success 1.0000"), std::string::npos) << r.out;
  const auto src = scenario::load_scenario(input);
  for (int k = 0; k < 6; ++k) {
    const auto out = scenario::load_scenario(dir / "a" / ("synth_7_1_mode" + std::to_string(k) + ".json"));
    ASSERT_EQ(out.agents.size(), src.agents.size() + 1);
    for (std::size_t i = 0; i < src.agents.size(); ++i) EXPECT_EQ(out.agents[i], src.agents[i]);
    EXPECT_TRUE(fs::exists(dir / "a" / ("synth_7_1_mode" + std::to_string(k) + ".sidecar.json")));
  }
  const auto again = cli({"generate", "--checkpoint", (ws.model / "model.ckpt").string(), "--scenario",
                          input.string(), "--num-modes", "6", "--mode", "replay", "--seed", "3", "--out",
                          (dir / "b").string()});
  ASSERT_EQ(again.code, 0);
  expect_same_tree(dir / "a", dir / "b");
}

TEST(CliGenerate, JobsDoNotChangeOutputs)
{
  const auto & ws = workspace();
  const auto dir = test::temp_dir("cli_gen_jobs");
  for (const char * jobs : {"1", "3"}) {
    const auto r = cli({"generate", "--checkpoint", (ws.model / "model.ckpt").string(), "--data",
                        ws.data.string(), "--num-modes", "2", "--mode", "closed_loop_reverse", "--seed",
                        "4", "--jobs", jobs, "--out", (dir / jobs).string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  expect_same_tree(dir / "1", dir / "3");
}

TEST(CliGenerate, CheckpointAndUsageErrors)
{
  const auto & ws = workspace();
  const auto dir = test::temp_dir("cli_gen_bad");
  const auto mismatch = small_config(dir, 32);
  EXPECT_EQ(cli({"generate", "--config", mismatch.string(), "--checkpoint",
                 (ws.model / "model.ckpt").string(), "--data", ws.data.string(), "--out",
                 (dir / "o").string()}).code,
            kCheckpoint);
  std::ofstream(dir / "junk.ckpt") << "junk";
  EXPECT_EQ(cli({"generate", "--checkpoint", (dir / "junk.ckpt").string(), "--data", ws.data.string(),
                 "--out", (dir / "o").string()}).code,
            kCheckpoint);
  EXPECT_EQ(cli({"generate", "--checkpoint", (ws.model / "model.ckpt").string(), "--data",
                 ws.data.string(), "--mode", "sideways", "--out", (dir / "o").string()}).code,
            kUsage);
  EXPECT_EQ(cli({"generate", "--checkpoint", (ws.model / "model.ckpt").string(), "--out",
                 (dir / "o").string()}).code,
            kUsage);
}

TEST(CliEvaluate, IdentityAdversaryAndPairing)
{
  const auto & ws = workspace();
  const auto dir = test::temp_dir("cli_eval");
  auto r = cli({"evaluate", "--pred", ws.data.string(), "--gt", ws.data.string(), "--out",
                (dir / "same.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir / "same.csv");
  EXPECT_EQ(csv, r.out);
  // Data row: fdd,add,jsd_velocity,jsd_accel,jsd_ttc,... sfde_avg is column 8.
  std::string row = csv.substr(csv.rfind('\n', csv.size() - 2) + 1);
  std::vector<std::string> cols;
  std::stringstream ss(row);
  for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
  ASSERT_GE(cols.size(), 12u);
  EXPECT_EQ(cols[2], "0.000000");
  EXPECT_EQ(cols[3], "0.000000");
  EXPECT_EQ(cols[4], "0.000000");
  EXPECT_EQ(cols[8], "0.000000");

  ASSERT_EQ(cli({"generate", "--checkpoint", (ws.model / "model.ckpt").string(), "--data",
                 ws.data.string(), "--num-modes", "2", "--seed", "1", "--out", (dir / "adv").string()}).code,
            0);
  r = cli({"evaluate", "--pred", (dir / "adv").string(), "--gt", ws.data.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  row = r.out.substr(r.out.rfind('\n', r.out.size() - 2) + 1);
  cols.clear();
  std::stringstream ss2(row);
  for (std::string c; std::getline(ss2, c, ',');) cols.push_back(c);
  EXPECT_EQ(cols[5], "1.000000");  // attack_success

  fs::create_directories(dir / "partial");
  fs::copy_file(ws.data / "synth_7_0.json", dir / "partial" / "synth_7_0.json");
  EXPECT_EQ(cli({"evaluate", "--pred", (dir / "partial").string(), "--gt", ws.data.string()}).code, kPairing);
}

TEST(CliPlot, DeterministicSvgAndEmptyMap)
{
  const auto & ws = workspace();
  const auto dir = test::temp_dir("cli_plot");
  const auto input = ws.data / "synth_7_2.json";
  ASSERT_EQ(cli({"plot", "--scenario", input.string(), "--out", (dir / "a.svg").string()}).code, 0);
  ASSERT_EQ(cli({"plot", "--scenario", input.string(), "--out", (dir / "b.svg").string()}).code, 0);
  const std::string svg = slurp(dir / "a.svg");
  EXPECT_EQ(svg, slurp(dir / "b.svg"));
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("#d62728"), std::string::npos);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);

  auto s = scenario::load_scenario(input);
  s.map.clear();
  scenario::save_scenario(s, dir / "empty.json");
  ASSERT_EQ(cli({"plot", "--scenario", (dir / "empty.json").string(), "--out", (dir / "e.svg").string()}).code, 0);
  const std::string empty = slurp(dir / "e.svg");
  EXPECT_EQ(empty.find("<polyline"), std::string::npos);
  EXPECT_NE(empty.find("<polygon"), std::string::npos);

  EXPECT_EQ(cli({"plot", "--scenario", (dir / "none.json").string(), "--out", (dir / "n.svg").string()}).code, kIo);
}

TEST(CliPlot, AdversaryDrawnAtImpact)
{
  const auto & ws = workspace();
  const auto dir = test::temp_dir("cli_plot_adv");
  ASSERT_EQ(cli({"generate", "--checkpoint", (ws.model / "model.ckpt").string(), "--scenario",
                 (ws.data / "synth_7_0.json").string(), "--num-modes", "1", "--out", (dir / "g").string()}).code,
            0);
  const auto sidecar = nlohmann::json::parse(slurp(dir / "g" / "synth_7_0_mode0.sidecar.json"));
  const int t_c = sidecar["spec"]["t_c"];
  ASSERT_EQ(cli({"plot", "--scenario", (dir / "g" / "synth_7_0_mode0.json").string(), "--stride", "1",
                 "--out", (dir / "p.svg").string()}).code,
            0);
  const std::string svg = slurp(dir / "p.svg");
  const auto group = svg.find("id=\"agent-adv\" fill=\"#ff7f0e\"");
  ASSERT_NE(group, std::string::npos);
  EXPECT_NE(svg.find("data-step=\"" + std::to_string(t_c) + "\"", group), std::string::npos);
}

TEST(RunConfig, JsonEchoIsStable)
{
  RunConfig rc;
  rc.seed = 42;
  rc.mode = "forward_refine";
  rc.model.hidden_dim = 32;
  const auto j = to_json(rc);
  const RunConfig back = run_config_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_THROW(run_config_from_json(nlohmann::json{{"sead", 1}}), std::invalid_argument);
  EXPECT_THROW(run_config_from_json(nlohmann::json{{"seed", "x"}}), std::invalid_argument);
}

}  // namespace
}  // namespace revsim::cli
