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


// kova: run experiments, self-checks and curve export.
//
//   kova train --config PATH [--override KEY=VALUE]... [--jobs N]
//   kova verify SUITE
//   kova export-curves DIR [--output FILE]
//
// Exit codes: 0 success, 1 check or run failure, 2 usage or config error.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "kova/errors.hpp"
#include "kova/experiment_config.hpp"
#include "kova/metrics.hpp"
#include "kova/trainer.hpp"
#include "kova/verify.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct RunJob {
  std::uint64_t seed = 0;
  std::uint64_t repetition = 0;
  kova::RunMetrics metrics;
  std::string error;
};

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides, unsigned jobs) {
  kova::ExperimentConfig exp;
  try {
    exp = kova::load_experiment(config_path, overrides);
  } catch (const kova::Error& e) {
    std::cerr << "kova train: " << e.what() << '\n';
    return kUsage;
  }

  std::filesystem::create_directories(exp.output_dir);
  std::vector<RunJob> runs;
  for (std::uint64_t seed : exp.seeds) {
    for (std::uint64_t r = 0; r < exp.repetitions; ++r) runs.push_back({seed, r, {}, {}});
  }

  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      RunJob& job = runs[i];
      kova::TrainConfig cfg = exp.train;
      cfg.seed = kova::repetition_seed(job.seed, job.repetition);
      try {
        job.metrics = kova::run_training(cfg);
        kova::save_metrics(exp.output_dir / kova::metrics_file_name(exp.label, job.seed, job.repetition),
                           job.metrics);
      } catch (const std::exception& e) {
        job.error = e.what();
      }
      const std::lock_guard<std::mutex> lock(log_mutex);
      if (!job.error.empty()) {
        std::cerr << "seed " << job.seed << " rep " << job.repetition << ": " << job.error << '\n';
      } else if (!job.metrics.records.empty()) {
        const kova::MetricRecord& last = job.metrics.records.back();
        std::cout << exp.label << " seed " << job.seed << " rep " << job.repetition << ": timestep "
                  << last.timestep << " success " << last.success_rate;
        if (last.value_error) std::cout << " value_error " << *last.value_error;
        std::cout << '\n';
      }
    }
  };
  const unsigned workers = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(runs.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<kova::RunMetrics> finished;
  bool failed = false;
  for (RunJob& job : runs) {
    if (!job.error.empty()) {
      failed = true;
      continue;
    }
    finished.push_back(std::move(job.metrics));
  }
  const std::filesystem::path summary_path = exp.output_dir / "summary.csv";
  std::ofstream summary(summary_path, std::ios::trunc);
  kova::write_summary_csv(summary, kova::summarize(finished));
  if (!summary) {
    std::cerr << "kova train: cannot write " << summary_path << '\n';
    return kFailure;
  }
  std::cout << "wrote " << finished.size() << " metrics files and " << summary_path.string() << '\n';
  return failed ? kFailure : kOk;
}

int cmd_verify(const std::string& suite) {
  const auto& names = kova::verify_suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    std::cerr << "kova verify: unknown suite '" << suite << "'; available:";
    for (const auto& n : names) std::cerr << ' ' << n;
    std::cerr << '\n';
    return kUsage;
  }
  const kova::SuiteResult result = kova::run_verify_suite(suite);
  for (const kova::CheckResult& c : result.checks) {
    std::cout << (c.passed() ? "PASS " : "FAIL ") << suite << ": " << c.name << " error " << c.error
              << " tolerance " << c.tolerance << '\n';
  }
  return result.passed() ? kOk : kFailure;
}

int cmd_export(const std::string& dir, const std::string& output) {
  try {
    if (output.empty()) {
      kova::export_curves(dir, std::cout);
    } else {
      std::ofstream f(output, std::ios::trunc);
      if (!f) {
        std::cerr << "kova export-curves: cannot write " << output << '\n';
        return kFailure;
      }
      kova::export_curves(dir, f);
    }
  } catch (const kova::Error& e) {
    std::cerr << "kova export-curves: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kalman optimization for value approximation"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "run a configured experiment");
  std::string config_path;
  std::vector<std::string> overrides;
  unsigned jobs = 1;
  train->add_option("--config", config_path, "experiment JSON file")->required();
  train->add_option("--override", overrides, "KEY=VALUE, dotted keys for nested fields");
  train->add_option("--jobs", jobs, "runs executed in parallel")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "run a self-check suite");
  std::string suite;
  verify->add_option("suite", suite, "suite name")->required();

  auto* exporter = app.add_subcommand("export-curves", "merge metrics files into one CSV");
  std::string metrics_dir;
  std::string output;
  exporter->add_option("dir", metrics_dir, "directory with metrics_*.jsonl")->required();
  exporter->add_option("--output", output, "write here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(config_path, overrides, jobs);
    if (*verify) return cmd_verify(suite);
    if (*exporter) return cmd_export(metrics_dir, output);
  } catch (const std::exception& e) {
    std::cerr << "kova: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
