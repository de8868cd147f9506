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


// JSON experiment files.
//
// Top-level keys (all optional unless marked):
//
//   label            string   run name used in file names (default "run")
//   task             "control" | "policy_eval"; must match the environment
//   environment      object   required, see below
//   model            object   {"kind": "mlp", "hidden": [16], "activation": "relu"}
//                             or {"kind": "linear", "bias": false}
//   optimizer        object or shorthand string "kova" | "adam" | "sgd" | "ktd"
//   target           object or shorthand string "double_q" | "dqn" | "k_step" | "gae"
//   batch_size       int      N (32)
//   replay_capacity  int      (10000)
//   target_update    int      t_update (200)
//   epsilon          real     exploration rate (0.1)
//   gamma            real     discount (0.95)
//   total_timesteps  int      (5000)
//   success_window   int      (50)
//   seeds            [int]    ([0])
//   repetitions      int      runs per seed (1)
//   output_dir       string   default $KOVA_OUTPUT_ROOT/<label>, with
//                             KOVA_OUTPUT_ROOT defaulting to "runs"
//
// environment:
//   {"kind": "maze", "layout": PATH, "start": "fixed_top_left" | "random_free_cell",
//    "loss_threshold": -50}
//   {"kind": "chain", "n": 6, "slip": 0.1, "rewards": [...], "policy": [...]}
//   Layout paths are relative to the config file's directory.
//
// optimizer:
//   {"kind": "kova", "learning_rate": 1, "p0": 1, "covariance_ceiling": 1e4,
//    "evolution": {"kind": "zero" | "fixed_diagonal" | "fading_memory", "value": η or σ²},
//    "observation": {"kind": "batch_size" | "fixed_diagonal", "value": σ²}}
//   {"kind": "adam", "learning_rate": 1e-3, "decay": false, "beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8}
//   {"kind": "sgd", "learning_rate": 0.01}
//   {"kind": "ktd", "observation_noise": 1, "eta": 0.01, "p0": 10, "kappa": 0, "learning_rate": 1,
//    "covariance_ceiling": 1e4}
//
// target:
//   {"kind": "double_q"} | {"kind": "dqn"} | {"kind": "k_step", "k": 1}
//   | {"kind": "gae", "lambda": 0.95, "horizon": 64}
//
// Unknown keys anywhere are rejected.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "kova/trainer.hpp"

namespace kova {

struct ExperimentConfig {
  std::string label = "run";
  TrainConfig train;
  std::vector<std::uint64_t> seeds{0};
  std::uint64_t repetitions = 1;
  std::filesystem::path output_dir;
};

/// Apply "dotted.key=value". The value is parsed as JSON when possible and
/// taken as a string otherwise. Shorthand strings are expanded to objects
/// when a nested key is overridden.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Validate and convert a document. Relative layout paths resolve against
/// base_dir.
ExperimentConfig parse_experiment(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Read, override and parse a config file. Throws ConfigError naming the path
/// when it cannot be read.
ExperimentConfig load_experiment(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Seed used for a given (seed, repetition): repetition 0 keeps the seed.
std::uint64_t repetition_seed(std::uint64_t seed, std::uint64_t repetition);

}  // namespace kova
