// Copyright 2026 The KOVA Authors. All rights reserved.
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


#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "kova/errors.hpp"
#include "kova/experiment_config.hpp"
#include "kova/metrics.hpp"

namespace kova {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string output;
};

Result run(const std::string& args, const fs::path& output_root = {}) {
  std::string cmd;
  if (!output_root.empty()) cmd = "KOVA_OUTPUT_ROOT='" + output_root.string() + "' ";
  cmd += std::string("'") + KOVA_BINARY + "' " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("kova_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const nlohmann::json& doc, const std::string& name = "cfg.json") {
    const fs::path p = dir_ / name;
    std::ofstream(p) << doc.dump(2);
    return p;
  }

  static nlohmann::json small_maze() {
    return {{"label", "small"},
            {"environment", {{"kind", "maze"}, {"layout", KOVA_SOURCE_DIR "/data/mazes/maze4x4.txt"}}},
            {"model", {{"kind", "mlp"}, {"hidden", {4}}}},
            {"optimizer", "kova"},
            {"batch_size", 4},
            {"total_timesteps", 40},
            {"seeds", {0}}};
  }

  fs::path dir_;
};

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

double type7(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

TEST_F(Cli, MissingConfigNamesPath) {
  const fs::path missing = dir_ / "nope.json";
  const Result r = run("train --config '" + missing.string() + "'", dir_);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find(missing.string()), std::string::npos) << r.output;
}

TEST_F(Cli, UnknownKeyRejected) {
  nlohmann::json doc = small_maze();
  doc["batchsize"] = 4;
  const Result r = run("train --config '" + write_config(doc).string() + "'", dir_);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("batchsize"), std::string::npos) << r.output;
  nlohmann::json nested = small_maze();
  nested["model"]["widths"] = {3};
  EXPECT_EQ(run("train --config '" + write_config(nested).string() + "'", dir_).code, 2);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("train").code, 2);
}

TEST(ApplyOverride, ChangesOnlyNamedKey) {
  nlohmann::json doc = {{"optimizer", "kova"}, {"batch_size", 32}, {"epsilon", 0.1}};
  nlohmann::json expect = doc;
  apply_override(doc, "optimizer=adam");
  expect["optimizer"] = "adam";
  EXPECT_EQ(doc, expect);
  apply_override(doc, "batch_size=8");
  expect["batch_size"] = 8;
  EXPECT_EQ(doc, expect);
  apply_override(doc, "optimizer.learning_rate=0.5");
  expect["optimizer"] = {{"kind", "adam"}, {"learning_rate", 0.5}};
  EXPECT_EQ(doc, expect);
  apply_override(doc, "model.hidden=[8,8]");
  expect["model"] = {{"hidden", {8, 8}}};
  EXPECT_EQ(doc, expect);
  EXPECT_THROW(apply_override(doc, "novalue"), ConfigError);
  EXPECT_THROW(apply_override(doc, "=3"), ConfigError);
  EXPECT_THROW(apply_override(doc, "batch_size.x=1"), ConfigError);
}

TEST_F(Cli, OverrideSelectsOptimizer) {
  const fs::path cfg = write_config(small_maze());
  const ExperimentConfig base = load_experiment(cfg);
  const ExperimentConfig adam = load_experiment(cfg, {"optimizer=adam"});
  EXPECT_EQ(base.train.optimizer.kind, OptimizerKind::kKova);
  EXPECT_EQ(adam.train.optimizer.kind, OptimizerKind::kAdam);
  EXPECT_EQ(adam.train.batch_size, base.train.batch_size);
  EXPECT_EQ(adam.train.total_timesteps, base.train.total_timesteps);
  EXPECT_EQ(adam.train.target_update, base.train.target_update);
  EXPECT_EQ(adam.seeds, base.seeds);
  EXPECT_EQ(adam.label, base.label);

  const Result r = run("train --config '" + cfg.string() + "' --override optimizer=adam --override label=ad", dir_);
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir_ / "ad" / "metrics_ad_seed0_rep0.jsonl"));
}

TEST_F(Cli, EightSeedsWriteEightFilesAndSummary) {
  nlohmann::json doc = small_maze();
  doc["seeds"] = {0, 1, 2, 3, 4, 5, 6, 7};
  const Result r = run("train --jobs 4 --config '" + write_config(doc).string() + "'", dir_);
  ASSERT_EQ(r.code, 0) << r.output;
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "small")) {
    if (e.path().filename().string().starts_with("metrics_")) ++files;
  }
  EXPECT_EQ(files, 8u);
  ASSERT_TRUE(fs::exists(dir_ / "small" / "summary.csv"));
  std::ifstream f(dir_ / "small" / "summary.csv");
  std::stringstream ss;
  ss << f.rdbuf();
  const auto rows = read_csv(ss.str());
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows[0].size(), 8u);
  EXPECT_EQ(rows[0][0], "timestep");
  EXPECT_EQ(rows.size(), 1u + 40u - 3u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][1], "8");

  // same seed, same stream regardless of scheduling
  const RunMetrics a = load_metrics(dir_ / "small" / "metrics_small_seed3_rep0.jsonl");
  doc["seeds"] = {3};
  doc["label"] = "again";
  ASSERT_EQ(run("train --config '" + write_config(doc, "again.json").string() + "'", dir_).code, 0);
  EXPECT_TRUE(a.same_stream(load_metrics(dir_ / "again" / "metrics_again_seed3_rep0.jsonl")));
}

TEST_F(Cli, Repetitions) {
  nlohmann::json doc = small_maze();
  doc["repetitions"] = 2;
  ASSERT_EQ(run("train --config '" + write_config(doc).string() + "'", dir_).code, 0);
  const RunMetrics r0 = load_metrics(dir_ / "small" / "metrics_small_seed0_rep0.jsonl");
  const RunMetrics r1 = load_metrics(dir_ / "small" / "metrics_small_seed0_rep1.jsonl");
  EXPECT_FALSE(r0.same_stream(r1));
  EXPECT_EQ(repetition_seed(9, 0), 9u);
  EXPECT_NE(repetition_seed(9, 1), repetition_seed(9, 2));
}

TEST_F(Cli, VerifyExitCodes) {
  const Result ok = run("verify gain-identity");
  EXPECT_EQ(ok.code, 0) << ok.output;
  EXPECT_EQ(ok.output.rfind("PASS", 0), 0u) << ok.output;
  const Result bad = run("verify no-such-suite");
  EXPECT_EQ(bad.code, 2);
  for (const char* s : {"gain-identity", "linear-gaussian", "corollary1", "jacobian", "chain-oracle", "psd"}) {
    EXPECT_NE(bad.output.find(s), std::string::npos) << s;
  }
}

TEST_F(Cli, ExportEmptyDirectoryFails) {
  const Result r = run("export-curves '" + dir_.string() + "'");
  EXPECT_EQ(r.code, 1);
  EXPECT_THROW(export_curves(dir_, std::cout), NoMetricsFound);
}

RunMetrics synthetic_run(std::mt19937_64& rng, std::uint64_t first, std::uint64_t last) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RunMetrics m;
  for (std::uint64_t t = first; t <= last; ++t) {
    MetricRecord r;
    r.timestep = t;
    r.success_rate = std::round(u(rng) * 50.0) / 50.0;
    r.model_evaluations = 2 * t;
    m.records.push_back(r);
  }
  return m;
}

TEST_F(Cli, ExportSingleRunIsItsOwnMedian) {
  std::mt19937_64 rng(101);
  const RunMetrics m = synthetic_run(rng, 5, 30);
  save_metrics(dir_ / metrics_file_name("solo", 0, 0), m);
  const Result r = run("export-curves '" + dir_.string() + "'");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = read_csv(r.output);
  ASSERT_EQ(rows.size(), 1u + m.records.size());
  EXPECT_EQ(rows[0], (std::vector<std::string>{"timestep", "solo_median", "solo_p25", "solo_p75"}));
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    EXPECT_EQ(std::stoull(rows[i + 1][0]), m.records[i].timestep);
    for (int c = 1; c <= 3; ++c) EXPECT_EQ(std::stod(rows[i + 1][c]), m.records[i].success_rate);
  }
}

TEST_F(Cli, ExportQuantilesOverEightRuns) {
  std::mt19937_64 rng(102);
  std::vector<RunMetrics> runs;
  for (std::uint64_t s = 0; s < 8; ++s) {
    runs.push_back(synthetic_run(rng, 4, 60 + 3 * s));
    save_metrics(dir_ / metrics_file_name("kova", s, 0), runs.back());
  }
  save_metrics(dir_ / metrics_file_name("adam", 0, 0), synthetic_run(rng, 10, 20));
  const fs::path out = dir_ / "curves.csv";
  ASSERT_EQ(run("export-curves '" + dir_.string() + "' --output '" + out.string() + "'").code, 0);
  std::ifstream f(out);
  std::stringstream ss;
  ss << f.rdbuf();
  const auto rows = read_csv(ss.str());
  ASSERT_GT(rows.size(), 1u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"timestep", "adam_median", "adam_p25", "adam_p75", "kova_median",
                                               "kova_p25", "kova_p75"}));
  std::uint64_t prev = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), 7u);
    const std::uint64_t t = std::stoull(rows[i][0]);
    if (i > 1) {
      EXPECT_GT(t, prev);
    }
    prev = t;
    EXPECT_EQ(rows[i][1].empty(), t < 10 || t > 20);
    std::vector<double> vals;
    for (const RunMetrics& m : runs) {
      if (t >= m.records.front().timestep && t <= m.records.back().timestep) {
        vals.push_back(m.records[t - m.records.front().timestep].success_rate);
      }
    }
    ASSERT_FALSE(vals.empty());
    EXPECT_NEAR(std::stod(rows[i][4]), type7(vals, 0.5), 1e-12) << t;
    EXPECT_NEAR(std::stod(rows[i][5]), type7(vals, 0.25), 1e-12) << t;
    EXPECT_NEAR(std::stod(rows[i][6]), type7(vals, 0.75), 1e-12) << t;
  }
  EXPECT_EQ(prev, 60u + 3u * 7u);
}

TEST_F(Cli, MetricsFieldOrder) {
  ASSERT_EQ(run("train --config '" + write_config(small_maze()).string() + "'", dir_).code, 0);
  std::ifstream f(dir_ / "small" / "metrics_small_seed0_rep0.jsonl");
  std::string line;
  ASSERT_TRUE(std::getline(f, line));
  const auto rec = nlohmann::ordered_json::parse(line);
  std::vector<std::string> keys;
  for (const auto& [k, v] : rec.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"timestep", "episode", "mean_episode_reward", "success_rate",
                                            "mle_objective", "ekf_objective", "value_error", "wall_clock_s",
                                            "model_evaluations"}));
  EXPECT_EQ(rec["timestep"], 4);
  EXPECT_TRUE(rec["value_error"].is_null());
}

}  // namespace
}  // namespace kova
