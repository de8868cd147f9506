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


#include "kova/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "kova/errors.hpp"

namespace kova {
namespace {

using nlohmann::ordered_json;

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::optional<double> optional_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string format_real(double v) {
  // Same shortest round-trip form as the JSONL files.
  return ordered_json(v).dump();
}

}  // namespace

bool RunMetrics::same_stream(const RunMetrics& other) const {
  if (records.size() != other.records.size()) return false;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const MetricRecord& a = records[i];
    const MetricRecord& b = other.records[i];
    if (a.timestep != b.timestep || a.episode != b.episode || a.mean_episode_reward != b.mean_episode_reward ||
        a.success_rate != b.success_rate || a.mle_objective != b.mle_objective ||
        a.ekf_objective != b.ekf_objective || a.value_error != b.value_error ||
        a.model_evaluations != b.model_evaluations) {
      return false;
    }
  }
  return true;
}

void write_metrics_jsonl(std::ostream& out, const RunMetrics& run) {
  for (const MetricRecord& r : run.records) {
    ordered_json j;
    j["timestep"] = r.timestep;
    j["episode"] = r.episode;
    j["mean_episode_reward"] = optional_json(r.mean_episode_reward);
    j["success_rate"] = r.success_rate;
    j["mle_objective"] = optional_json(r.mle_objective);
    j["ekf_objective"] = optional_json(r.ekf_objective);
    j["value_error"] = optional_json(r.value_error);
    j["wall_clock_s"] = r.wall_clock_s;
    j["model_evaluations"] = r.model_evaluations;
    out << j.dump() << '\n';
  }
}

RunMetrics read_metrics_jsonl(std::istream& in) {
  RunMetrics run;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      MetricRecord r;
      r.timestep = j.at("timestep").get<std::uint64_t>();
      r.episode = j.at("episode").get<std::uint64_t>();
      r.mean_episode_reward = optional_from(j.at("mean_episode_reward"));
      r.success_rate = j.at("success_rate").get<double>();
      r.mle_objective = optional_from(j.at("mle_objective"));
      r.ekf_objective = optional_from(j.at("ekf_objective"));
      r.value_error = optional_from(j.at("value_error"));
      r.wall_clock_s = j.at("wall_clock_s").get<double>();
      r.model_evaluations = j.at("model_evaluations").get<std::uint64_t>();
      run.records.push_back(r);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("metrics line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return run;
}

void save_metrics(const std::filesystem::path& path, const RunMetrics& run) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  write_metrics_jsonl(f, run);
  if (!f) throw Error("write failed for " + path.string());
}

RunMetrics load_metrics(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path.string());
  return read_metrics_jsonl(f);
}

std::string metrics_file_name(const std::string& label, std::uint64_t seed, std::uint64_t repetition) {
  return "metrics_" + label + "_seed" + std::to_string(seed) + "_rep" + std::to_string(repetition) + ".jsonl";
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InsufficientData("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<SummaryRow> summarize(const std::vector<RunMetrics>& runs) {
  std::map<std::uint64_t, std::pair<std::vector<double>, std::vector<double>>> by_step;
  for (const RunMetrics& run : runs) {
    for (const MetricRecord& r : run.records) {
      auto& [success, reward] = by_step[r.timestep];
      success.push_back(r.success_rate);
      if (r.mean_episode_reward) reward.push_back(*r.mean_episode_reward);
    }
  }
  std::vector<SummaryRow> rows;
  rows.reserve(by_step.size());
  for (const auto& [t, samples] : by_step) {
    const auto& [success, reward] = samples;
    SummaryRow row;
    row.timestep = t;
    row.runs = success.size();
    row.success_median = quantile(success, 0.5);
    row.success_p25 = quantile(success, 0.25);
    row.success_p75 = quantile(success, 0.75);
    double sum = 0.0;
    for (double s : success) sum += s;
    row.success_mean = sum / static_cast<double>(success.size());
    double ss = 0.0;
    for (double s : success) ss += (s - row.success_mean) * (s - row.success_mean);
    row.success_std = success.size() > 1 ? std::sqrt(ss / static_cast<double>(success.size() - 1)) : 0.0;
    if (!reward.empty()) row.reward_median = quantile(reward, 0.5);
    rows.push_back(row);
  }
  return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "timestep,runs,success_median,success_p25,success_p75,success_mean,success_std,reward_median\n";
  for (const SummaryRow& r : rows) {
    out << r.timestep << ',' << r.runs << ',' << format_real(r.success_median) << ',' << format_real(r.success_p25)
        << ',' << format_real(r.success_p75) << ',' << format_real(r.success_mean) << ','
        << format_real(r.success_std) << ',' << (r.reward_median ? format_real(*r.reward_median) : "") << '\n';
  }
}

void export_curves(const std::filesystem::path& dir, std::ostream& out) {
  if (!std::filesystem::is_directory(dir)) throw NoMetricsFound("not a directory: " + dir.string());
  std::map<std::string, std::vector<RunMetrics>> by_label;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (!name.starts_with("metrics_") || !name.ends_with(".jsonl")) continue;
    const std::size_t seed_pos = name.rfind("_seed");
    if (seed_pos == std::string::npos || seed_pos < 8) continue;
    by_label[name.substr(8, seed_pos - 8)].push_back(load_metrics(entry.path()));
  }
  if (by_label.empty()) throw NoMetricsFound("no metrics_*.jsonl files in " + dir.string());

  struct Cell {
    double median, p25, p75;
  };
  std::map<std::uint64_t, std::map<std::string, Cell>> table;
  for (const auto& [label, runs] : by_label) {
    for (const SummaryRow& row : summarize(runs)) {
      table[row.timestep][label] = {row.success_median, row.success_p25, row.success_p75};
    }
  }
  out << "timestep";
  for (const auto& [label, runs] : by_label) out << ',' << label << "_median," << label << "_p25," << label << "_p75";
  out << '\n';
  for (const auto& [t, cells] : table) {
    out << t;
    for (const auto& [label, runs] : by_label) {
      const auto it = cells.find(label);
      if (it == cells.end()) {
        out << ",,,";
      } else {
        out << ',' << format_real(it->second.median) << ',' << format_real(it->second.p25) << ','
            << format_real(it->second.p75);
      }
    }
    out << '\n';
  }
}

double final_success_rate(const RunMetrics& run) {
  return run.records.empty() ? 0.0 : run.records.back().success_rate;
}

}  // namespace kova
