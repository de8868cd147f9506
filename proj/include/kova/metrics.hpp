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


// Per-run metric streams, cross-run summaries and curve export.
//
// A metrics file is line-delimited JSON, UTF-8, one record per optimizer step,
// with the fields in exactly this order:
//
//   timestep              u64   environment steps taken so far
//   episode               u64   completed episodes so far
//   mean_episode_reward   real  mean return over the last 50 episodes, or null
//   success_rate          real  fraction of wins over the last 50 episodes
//   mle_objective         real  (1/2N) Σ δ² before the update
//   ekf_objective         real  KOVA objective after the update, or null
//   value_error           real  max_s |V̂(s) - V^π(s)|, or null
//   wall_clock_s          real  seconds since the run started
//   model_evaluations     u64   forward passes so far
//
// Reals are written with the shortest round-trip representation.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace kova {

struct MetricRecord {
  std::uint64_t timestep = 0;
  std::uint64_t episode = 0;
  std::optional<double> mean_episode_reward;
  double success_rate = 0.0;
  std::optional<double> mle_objective;
  std::optional<double> ekf_objective;
  std::optional<double> value_error;
  double wall_clock_s = 0.0;
  std::uint64_t model_evaluations = 0;
};

struct RunMetrics {
  std::vector<MetricRecord> records;

  /// Equal in every field except wall-clock time.
  bool same_stream(const RunMetrics& other) const;
};

void write_metrics_jsonl(std::ostream& out, const RunMetrics& run);
RunMetrics read_metrics_jsonl(std::istream& in);
void save_metrics(const std::filesystem::path& path, const RunMetrics& run);
RunMetrics load_metrics(const std::filesystem::path& path);

/// "metrics_<label>_seed<seed>_rep<rep>.jsonl"
std::string metrics_file_name(const std::string& label, std::uint64_t seed, std::uint64_t repetition);

/// Linear-interpolation quantile (type 7) of a non-empty sample.
double quantile(std::vector<double> values, double q);

struct SummaryRow {
  std::uint64_t timestep = 0;
  std::size_t runs = 0;
  double success_median = 0.0;
  double success_p25 = 0.0;
  double success_p75 = 0.0;
  double success_mean = 0.0;
  double success_std = 0.0;
  std::optional<double> reward_median;
};

/// Per-timestep statistics over the runs that recorded that timestep.
std::vector<SummaryRow> summarize(const std::vector<RunMetrics>& runs);

/// CSV with header
///   timestep,runs,success_median,success_p25,success_p75,success_mean,success_std,reward_median
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

/// Reads every metrics_*.jsonl under `dir`, groups runs by label and writes
///   timestep,<label>_median,<label>_p25,<label>_p75,...
/// with labels sorted and empty cells where a label has no value. Throws
/// NoMetricsFound when the directory holds no metrics files.
void export_curves(const std::filesystem::path& dir, std::ostream& out);

/// Success rate of the last record of a run (0 for an empty run).
double final_success_rate(const RunMetrics& run);

}  // namespace kova
