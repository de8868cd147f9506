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


// Experiment loops: double Q-learning on mazes and fixed-policy evaluation
// on the chain MDP, with any of the supported optimizers.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "kova/baselines.hpp"
#include "kova/chain.hpp"
#include "kova/filter.hpp"
#include "kova/ktd.hpp"
#include "kova/maze.hpp"
#include "kova/metrics.hpp"
#include "kova/td_targets.hpp"
#include "kova/value_model.hpp"

namespace kova {

/// Lowest-index argmax with probability 1-ε, otherwise a uniform action.
Index epsilon_greedy(const VectorXd& q_values, double epsilon, std::mt19937_64& rng);

enum class ModelKind { kLinear, kMlp };

struct ModelSpec {
  ModelKind kind = ModelKind::kMlp;
  std::vector<Index> hidden;  // hidden widths for kMlp
  Activation activation = Activation::kRelu;
  bool bias = false;  // kLinear only; MLP layers always have biases

  ValueModel build(Index inputs, Index heads) const;
};

enum class OptimizerKind { kKova, kAdam, kSgd, kKtd };

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::kKova;
  KovaConfig kova;
  AdamConfig adam;
  bool adam_decay = false;  // decay linearly to zero over the run
  double sgd_learning_rate = 1e-2;
  KtdConfig ktd;
};

struct ChainTask {
  ChainMdpSpec spec;
  ChainPolicy policy;
};

struct TrainConfig {
  std::variant<ChainTask, MazeSpec> environment;
  ModelSpec model;
  OptimizerSpec optimizer;
  TargetSpec target = TargetSpec::double_q(0.95);
  std::size_t batch_size = 32;
  std::size_t replay_capacity = 10000;
  std::uint64_t target_update = 200;
  double epsilon = 0.1;
  std::uint64_t total_timesteps = 5000;
  std::uint64_t seed = 0;
  std::size_t success_window = 50;

  void validate() const;
};

/// Called after every optimizer step with the record just produced. Return
/// false to stop the run early.
using RecordCallback = std::function<bool(const MetricRecord&)>;

/// Double Q-learning on a maze environment.
RunMetrics run_double_q(const TrainConfig& cfg, const RecordCallback& on_record = {});

/// Fit V for the fixed chain policy; records max |V̂ - V^π| at every step.
RunMetrics run_policy_eval(const TrainConfig& cfg, const RecordCallback& on_record = {});

/// Dispatch on the environment kind.
RunMetrics run_training(const TrainConfig& cfg, const RecordCallback& on_record = {});

/// Independent stream seeds derived from one run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace kova
