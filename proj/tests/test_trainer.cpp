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


#include <cmath>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "kova/trainer.hpp"
#include "oracles.hpp"

namespace kova {
namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TEST(EpsilonGreedy, Greedy) {
  std::mt19937_64 rng(91);
  EXPECT_EQ(epsilon_greedy(vec({1, 3, 2}), 0.0, rng), 1);
  EXPECT_EQ(epsilon_greedy(vec({2, 2, 0}), 0.0, rng), 0);
  EXPECT_THROW(epsilon_greedy(VectorXd(0), 0.1, rng), EmptyActionSet);
  EXPECT_THROW(epsilon_greedy(vec({1}), 1.5, rng), ConfigError);
}

TEST(EpsilonGreedy, UniformWhenFullyRandom) {
  std::mt19937_64 rng(92);
  const int draws = 100000;
  std::vector<std::uint64_t> counts(4, 0);
  for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(epsilon_greedy(vec({0, 9, 1, 2}), 1.0, rng))];
  const double sd = std::sqrt(draws * 0.25 * 0.75);
  for (auto c : counts) EXPECT_NEAR(static_cast<double>(c), draws / 4.0, 3 * sd);
}

TEST(EpsilonGreedy, ExplorationRate) {
  std::mt19937_64 rng(93);
  const int draws = 100000;
  int greedy = 0;
  for (int i = 0; i < draws; ++i) greedy += epsilon_greedy(vec({0, 9, 1, 2}), 0.2, rng) == 1 ? 1 : 0;
  // 1 - ε + ε/4
  const double p = 0.85;
  EXPECT_NEAR(greedy / static_cast<double>(draws), p, 4 * std::sqrt(p * (1 - p) / draws));
}

TrainConfig maze_config(OptimizerKind kind, std::uint64_t steps = 300) {
  TrainConfig cfg;
  cfg.environment = MazeSpec::load(KOVA_SOURCE_DIR "/data/mazes/maze4x4.txt");
  cfg.model.hidden = {8};
  cfg.optimizer.kind = kind;
  cfg.batch_size = 8;
  cfg.total_timesteps = steps;
  cfg.target_update = 50;
  cfg.seed = 5;
  if (kind == OptimizerKind::kKtd) {
    cfg.target = TargetSpec::dqn_max(0.95);
    cfg.batch_size = 1;
  }
  return cfg;
}

TrainConfig chain_config(TargetSpec target) {
  TrainConfig cfg;
  ChainTask task;
  task.spec.n = 6;
  task.spec.slip = 0.1;
  task.spec.rewards = {0.5, 0, 0, 0, 0, 1};
  task.spec.gamma = target.gamma;
  task.policy = {0.7, 0.6, 0.5, 0.5, 0.6, 0.7};
  cfg.environment = task;
  cfg.model.kind = ModelKind::kLinear;
  cfg.target = target;
  cfg.optimizer.kova.noise.evolution = EvolutionNoise::fading_memory(0.002);
  cfg.target_update = 10;
  cfg.total_timesteps = 2000;
  cfg.seed = 3;
  return cfg;
}

TEST(RunDoubleQ, StepAccountingAndWarmup) {
  const TrainConfig cfg = maze_config(OptimizerKind::kKova);
  const RunMetrics run = run_double_q(cfg);
  ASSERT_EQ(run.records.size(), cfg.total_timesteps - (cfg.batch_size - 1));
  EXPECT_EQ(run.records.front().timestep, cfg.batch_size);
  EXPECT_EQ(run.records.back().timestep, cfg.total_timesteps);
  for (std::size_t i = 1; i < run.records.size(); ++i) {
    EXPECT_EQ(run.records[i].timestep, run.records[i - 1].timestep + 1);
    EXPECT_GE(run.records[i].episode, run.records[i - 1].episode);
    EXPECT_GE(run.records[i].success_rate, 0.0);
    EXPECT_LE(run.records[i].success_rate, 1.0);
  }
  // double-Q: target heads, online heads, h and J
  EXPECT_EQ(run.records.back().model_evaluations, 3 * run.records.size());
  EXPECT_TRUE(run.records.back().ekf_objective.has_value());
  EXPECT_FALSE(run.records.back().value_error.has_value());
}

TEST(RunDoubleQ, KovaDqnUsesTwoPassesPerStep) {
  TrainConfig cfg = maze_config(OptimizerKind::kKova, 100);
  cfg.target = TargetSpec::dqn_max(0.95);
  const RunMetrics run = run_double_q(cfg);
  EXPECT_EQ(run.records.back().model_evaluations, 2 * run.records.size());
}

TEST(RunDoubleQ, KtdCountsSigmaPointPasses) {
  const TrainConfig cfg = maze_config(OptimizerKind::kKtd, 40);
  const RunMetrics run = run_double_q(cfg);
  const auto d = static_cast<std::uint64_t>(cfg.model.build(16, 4).parameter_count());
  ASSERT_EQ(run.records.size(), 40u);
  for (std::size_t i = 0; i < run.records.size(); ++i) {
    EXPECT_EQ(run.records[i].model_evaluations, (i + 1) * 2 * (2 * d + 1));
  }
}

TEST(RunDoubleQ, BitReproducible) {
  for (OptimizerKind kind : {OptimizerKind::kKova, OptimizerKind::kAdam, OptimizerKind::kSgd}) {
    const TrainConfig cfg = maze_config(kind, 400);
    const RunMetrics a = run_double_q(cfg);
    const RunMetrics b = run_double_q(cfg);
    EXPECT_TRUE(a.same_stream(b));
    TrainConfig other = cfg;
    other.seed = 6;
    EXPECT_FALSE(a.same_stream(run_double_q(other)));
  }
}

TEST(RunDoubleQ, CallbackStopsEarly) {
  std::size_t calls = 0;
  const RunMetrics run = run_double_q(maze_config(OptimizerKind::kAdam), [&](const MetricRecord&) {
    return ++calls < 10;
  });
  EXPECT_EQ(run.records.size(), 10u);
}

TEST(RunDoubleQ, EpisodesCompleteAndRewardsRecorded) {
  TrainConfig cfg = maze_config(OptimizerKind::kKova, 3000);
  cfg.epsilon = 1.0;
  const RunMetrics run = run_double_q(cfg);
  EXPECT_GT(run.records.back().episode, 0u);
  ASSERT_TRUE(run.records.back().mean_episode_reward.has_value());
  EXPECT_LE(*run.records.back().mean_episode_reward, 1.0);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg = maze_config(OptimizerKind::kKova);
  cfg.batch_size = 20000;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = maze_config(OptimizerKind::kKova);
  cfg.target_update = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = maze_config(OptimizerKind::kKova);
  cfg.target = TargetSpec::k_step(0.95, 1);
  EXPECT_THROW(cfg.validate(), ConfigError);
  TrainConfig chain = chain_config(TargetSpec::k_step(0.8, 1));
  std::get<ChainTask>(chain.environment).spec.gamma = 0.9;
  EXPECT_THROW(chain.validate(), ConfigError);
  chain = chain_config(TargetSpec::dqn_max(0.8));
  EXPECT_THROW(chain.validate(), ConfigError);
  chain = chain_config(TargetSpec::k_step(0.8, 1));
  chain.optimizer.kind = OptimizerKind::kKtd;
  EXPECT_THROW(chain.validate(), ConfigError);
  EXPECT_THROW(run_double_q(chain_config(TargetSpec::k_step(0.8, 1))), ConfigError);
}

TEST(RunPolicyEval, MyopicValueIsImmediateReward) {
  TrainConfig cfg = chain_config(TargetSpec::k_step(0.0, 1));
  cfg.optimizer.kova.noise.evolution = EvolutionNoise::fading_memory(0.05);
  const RunMetrics run = run_policy_eval(cfg);
  ASSERT_FALSE(run.records.empty());
  ASSERT_TRUE(run.records.back().value_error.has_value());
  EXPECT_LT(*run.records.back().value_error, 1e-6);
}

TEST(RunPolicyEval, ErrorShrinks) {
  TrainConfig cfg = chain_config(TargetSpec::k_step(0.8, 1));
  cfg.total_timesteps = 5000;
  const RunMetrics run = run_policy_eval(cfg);
  EXPECT_EQ(run.records.size(), cfg.total_timesteps - (cfg.batch_size - 1));
  EXPECT_LT(*run.records.back().value_error, 0.5 * *run.records.front().value_error);
  EXPECT_LT(*run.records.back().value_error, 0.2);
}

TEST(RunPolicyEval, GaeLambdaZeroMatchesOneStep) {
  const RunMetrics k1 = run_policy_eval(chain_config(TargetSpec::k_step(0.8, 1)));
  const RunMetrics g0 = run_policy_eval(chain_config(TargetSpec::gae(0.8, 0.0, 8)));
  ASSERT_EQ(k1.records.size(), g0.records.size());
  for (std::size_t i = 0; i < k1.records.size(); ++i) {
    ASSERT_EQ(k1.records[i].mle_objective, g0.records[i].mle_objective) << "step " << i;
    ASSERT_EQ(k1.records[i].value_error, g0.records[i].value_error) << "step " << i;
  }
}

TEST(RunPolicyEval, Reproducible) {
  const TrainConfig cfg = chain_config(TargetSpec::gae(0.8, 0.9, 8));
  EXPECT_TRUE(run_policy_eval(cfg).same_stream(run_policy_eval(cfg)));
}

TEST(DeriveSeed, DistinctStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 20; ++s) {
    for (std::uint64_t k = 0; k < 5; ++k) seen.insert(derive_seed(s, k));
  }
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(derive_seed(7, 2), derive_seed(7, 2));
}

}  // namespace
}  // namespace kova
