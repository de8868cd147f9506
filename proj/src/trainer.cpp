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


#include "kova/trainer.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <string>

#include "kova/errors.hpp"

namespace kova {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over (seed, stream)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Index epsilon_greedy(const VectorXd& q_values, double epsilon, std::mt19937_64& rng) {
  if (q_values.size() == 0) throw EmptyActionSet("epsilon_greedy over zero actions");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < epsilon) {
    std::uniform_int_distribution<Index> pick(0, q_values.size() - 1);
    return pick(rng);
  }
  return argmax_lowest(q_values);
}

ValueModel ModelSpec::build(Index inputs, Index heads) const {
  if (kind == ModelKind::kLinear) return ValueModel::linear(inputs, heads, bias);
  std::vector<Index> widths{inputs};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(heads);
  return ValueModel::mlp(widths, activation);
}

void TrainConfig::validate() const {
  target.validate();
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (batch_size > replay_capacity) throw ConfigError("batch_size must not exceed replay_capacity");
  if (target_update < 1) throw ConfigError("target_update must be >= 1");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  if (total_timesteps < 1) throw ConfigError("total_timesteps must be >= 1");
  if (success_window < 1) throw ConfigError("success_window must be >= 1");
  switch (optimizer.kind) {
    case OptimizerKind::kKova:
      optimizer.kova.validate();
      break;
    case OptimizerKind::kAdam:
      optimizer.adam.validate();
      break;
    case OptimizerKind::kSgd:
      if (!(optimizer.sgd_learning_rate > 0.0)) throw ConfigError("SGD learning rate must be > 0");
      break;
    case OptimizerKind::kKtd:
      optimizer.ktd.validate();
      if (target.is_state_value()) throw ConfigError("KTD supports Q-learning targets only");
      break;
  }
  if (const auto* chain = std::get_if<ChainTask>(&environment)) {
    chain->spec.validate();
    if (static_cast<int>(chain->policy.size()) != chain->spec.n) {
      throw ConfigError("chain policy needs one probability per state");
    }
    if (!target.is_state_value()) throw ConfigError("policy evaluation needs a k_step or gae target");
    if (std::abs(chain->spec.gamma - target.gamma) > 0.0) throw ConfigError("chain gamma and target gamma differ");
  } else if (target.is_state_value()) {
    throw ConfigError("maze control needs a dqn or double_q target");
  }
}

namespace {

struct StepStats {
  std::optional<double> mle;
  std::optional<double> ekf;
};

// The online parameters plus whichever optimizer state is in use.
class Learner {
 public:
  Learner(const TrainConfig& cfg, const ValueModel& model, VectorXd theta0, std::uint64_t optimizer_steps)
      : cfg_(cfg.optimizer), model_(model) {
    switch (cfg_.kind) {
      case OptimizerKind::kKova:
        filter_ = FilterState<double>::initial(std::move(theta0), cfg_.kova.p0_scale);
        break;
      case OptimizerKind::kKtd:
        filter_ = FilterState<double>::initial(std::move(theta0), cfg_.ktd.p0_scale);
        break;
      case OptimizerKind::kAdam: {
        AdamConfig ac = cfg_.adam;
        if (cfg.optimizer.adam_decay) ac.decay_steps = optimizer_steps;
        adam_ = AdamState::initial(theta0.size(), ac);
        filter_.theta = std::move(theta0);
        break;
      }
      case OptimizerKind::kSgd:
        filter_.theta = std::move(theta0);
        break;
    }
  }

  const VectorXd& theta() const { return filter_.theta; }
  bool is_ktd() const { return cfg_.kind == OptimizerKind::kKtd; }

  StepStats update(const ObservationBatch<double>& batch) {
    StepStats out;
    switch (cfg_.kind) {
      case OptimizerKind::kKova: {
        KovaStepReport<double> report;
        filter_ = kova_step(std::move(filter_), batch, cfg_.kova, &report);
        out.mle = report.mle_objective;
        out.ekf = report.ekf_objective_linearized;
        break;
      }
      case OptimizerKind::kAdam:
        out.mle = mle_objective(batch);
        filter_.theta = adam_step(adam_, filter_.theta, mle_gradient(batch));
        break;
      case OptimizerKind::kSgd:
        out.mle = mle_objective(batch);
        filter_.theta = sgd_step(filter_.theta, mle_gradient(batch), cfg_.sgd_learning_rate);
        break;
      case OptimizerKind::kKtd:
        throw ConfigError("KTD learns from single transitions");
    }
    return out;
  }

  StepStats update_ktd(const Transition& tr, PassCounter* counter) {
    KtdStepReport report;
    filter_ = ktd_step(std::move(filter_), tr, model_, cfg_.ktd, counter, &report);
    return {0.5 * report.innovation * report.innovation, std::nullopt};
  }

 private:
  const OptimizerSpec& cfg_;
  const ValueModel& model_;
  FilterState<double> filter_;
  AdamState adam_;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Last-K episode outcomes.
class EpisodeWindow {
 public:
  explicit EpisodeWindow(std::size_t size) : size_(size) {}

  void add(bool win, double total_reward) {
    ++episodes_;
    window_.push_back({win, total_reward});
    if (window_.size() > size_) window_.pop_front();
  }

  std::uint64_t episodes() const { return episodes_; }

  double success_rate() const {
    if (window_.empty()) return 0.0;
    std::size_t wins = 0;
    for (const auto& e : window_) wins += e.first ? 1 : 0;
    return static_cast<double>(wins) / static_cast<double>(window_.size());
  }

  std::optional<double> mean_reward() const {
    if (window_.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto& e : window_) sum += e.second;
    return sum / static_cast<double>(window_.size());
  }

 private:
  std::size_t size_;
  std::uint64_t episodes_ = 0;
  std::deque<std::pair<bool, double>> window_;
};

std::uint64_t optimizer_step_budget(const TrainConfig& cfg) {
  if (cfg.optimizer.kind == OptimizerKind::kKtd) return cfg.total_timesteps;
  const std::uint64_t warmup = cfg.batch_size - 1;
  return cfg.total_timesteps > warmup ? cfg.total_timesteps - warmup : 0;
}

}  // namespace

RunMetrics run_double_q(const TrainConfig& cfg, const RecordCallback& on_record) {
  cfg.validate();
  const auto* maze = std::get_if<MazeSpec>(&cfg.environment);
  if (maze == nullptr) throw ConfigError("run_double_q needs a maze environment");

  std::mt19937_64 env_rng(derive_seed(cfg.seed, 0));
  std::mt19937_64 act_rng(derive_seed(cfg.seed, 1));
  ReplayBuffer replay(cfg.replay_capacity, derive_seed(cfg.seed, 2));
  const ValueModel model = cfg.model.build(maze->feature_width(), kMazeActionCount);
  Learner learner(cfg, model, init_parameters(model, derive_seed(cfg.seed, 3)), optimizer_step_budget(cfg));
  VectorXd target_theta = learner.theta();

  RunMetrics metrics;
  EpisodeWindow episodes(cfg.success_window);
  PassCounter passes;
  const Clock clock;

  MazeState state = maze_reset(*maze, env_rng);
  VectorXd features = maze_render(*maze, state);
  for (std::uint64_t t = 1; t <= cfg.total_timesteps; ++t) {
    const VectorXd q = model.forward(learner.theta(), features);
    const Index action = epsilon_greedy(q, cfg.epsilon, act_rng);
    MazeStepResult step = maze_step(*maze, state, static_cast<int>(action));
    VectorXd next_features = maze_render(*maze, step.state);
    const bool terminal = step.outcome != MazeOutcome::kContinue;
    Transition tr{features, action, step.reward, next_features, terminal};

    StepStats stats;
    bool stepped = false;
    if (learner.is_ktd()) {
      stats = learner.update_ktd(tr, &passes);
      stepped = true;
    }
    replay.push(std::move(tr));
    if (!learner.is_ktd() && replay.size() >= cfg.batch_size) {
      const TargetModels models{model, learner.theta(), target_theta};
      const ObservationBatch<double> batch = sample_batch(replay, cfg.batch_size, cfg.target, models, &passes);
      stats = learner.update(batch);
      stepped = true;
    }

    if (terminal) {
      episodes.add(step.outcome == MazeOutcome::kWin, step.state.cumulative_reward);
      state = maze_reset(*maze, env_rng);
      features = maze_render(*maze, state);
    } else {
      state = std::move(step.state);
      features = std::move(next_features);
    }
    if (t % cfg.target_update == 0) target_theta = learner.theta();

    if (stepped) {
      MetricRecord rec;
      rec.timestep = t;
      rec.episode = episodes.episodes();
      rec.mean_episode_reward = episodes.mean_reward();
      rec.success_rate = episodes.success_rate();
      rec.mle_objective = stats.mle;
      rec.ekf_objective = stats.ekf;
      rec.wall_clock_s = clock.seconds();
      rec.model_evaluations = passes.passes;
      metrics.records.push_back(rec);
      if (on_record && !on_record(rec)) break;
    }
  }
  return metrics;
}

RunMetrics run_policy_eval(const TrainConfig& cfg, const RecordCallback& on_record) {
  cfg.validate();
  const auto* task = std::get_if<ChainTask>(&cfg.environment);
  if (task == nullptr) throw ConfigError("run_policy_eval needs a chain environment");
  if (cfg.optimizer.kind == OptimizerKind::kKtd) throw ConfigError("policy evaluation does not support KTD");
  const ChainMdpSpec& chain = task->spec;

  std::mt19937_64 env_rng(derive_seed(cfg.seed, 0));
  std::mt19937_64 act_rng(derive_seed(cfg.seed, 1));
  ReplayBuffer replay(cfg.replay_capacity, derive_seed(cfg.seed, 2));
  const ValueModel model = cfg.model.build(chain.n, 1);
  Learner learner(cfg, model, init_parameters(model, derive_seed(cfg.seed, 3)), optimizer_step_budget(cfg));
  VectorXd target_theta = learner.theta();

  const VectorXd exact = chain_exact_value(chain, task->policy);
  MatrixXd all_states = MatrixXd::Identity(chain.n, chain.n);
  if (model.input_width() != chain.n) throw ShapeMismatch("chain model input width");

  RunMetrics metrics;
  PassCounter passes;
  const Clock clock;
  std::uniform_int_distribution<int> start(0, chain.n - 1);
  int s = start(env_rng);
  for (std::uint64_t t = 1; t <= cfg.total_timesteps; ++t) {
    const int a = chain_sample_action(task->policy, s, act_rng);
    const ChainStep step = chain_step(chain, s, a, env_rng);
    replay.push({chain_features(chain, s), a, step.reward, chain_features(chain, step.next_state), false});
    s = step.next_state;

    if (replay.size() >= cfg.batch_size) {
      const TargetModels models{model, learner.theta(), target_theta};
      const ObservationBatch<double> batch = sample_batch(replay, cfg.batch_size, cfg.target, models, &passes);
      const StepStats stats = learner.update(batch);
      const VectorXd estimate = model.forward(learner.theta(), all_states).row(0).transpose();

      MetricRecord rec;
      rec.timestep = t;
      rec.mle_objective = stats.mle;
      rec.ekf_objective = stats.ekf;
      rec.value_error = (estimate - exact).cwiseAbs().maxCoeff();
      rec.wall_clock_s = clock.seconds();
      rec.model_evaluations = passes.passes;
      metrics.records.push_back(rec);
      if (on_record && !on_record(rec)) break;
    }
    if (t % cfg.target_update == 0) target_theta = learner.theta();
  }
  return metrics;
}

RunMetrics run_training(const TrainConfig& cfg, const RecordCallback& on_record) {
  if (std::holds_alternative<MazeSpec>(cfg.environment)) return run_double_q(cfg, on_record);
  return run_policy_eval(cfg, on_record);
}

}  // namespace kova
