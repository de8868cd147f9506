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


#include "kova/experiment_config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "kova/errors.hpp"

namespace kova {
namespace {

using nlohmann::json;

// Reads keys from one JSON object and rejects any it was not asked about.
class Fields {
 public:
  Fields(json obj, std::string where) : obj_(std::move(obj)), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  const json& at(const std::string& key) {
    if (!has(key)) throw ConfigError(where_ + ": missing required key '" + key + "'");
    return obj_.at(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(obj_.at(key), key);
  }

  template <typename T>
  T require(const std::string& key) {
    return convert<T>(at(key), key);
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
    }
  }

  const std::string& where() const { return where_; }

 private:
  template <typename T>
  T convert(const json& j, const std::string& key) const {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!j.is_number()) throw ConfigError(where_ + "." + key + ": expected a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!j.is_number_integer() || (std::is_unsigned_v<T> && j.get<std::int64_t>() < 0)) {
          throw ConfigError(where_ + "." + key + ": expected a non-negative integer");
        }
      }
      return j.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  json obj_;
  std::string where_;
  std::set<std::string> seen_;
};

json expand_shorthand(const json& j) {
  if (j.is_string()) return json{{"kind", j.get<std::string>()}};
  return j;
}

ModelSpec parse_model(const json& j) {
  Fields f(j, "model");
  ModelSpec m;
  const auto kind = f.get<std::string>("kind", "mlp");
  if (kind == "linear") {
    m.kind = ModelKind::kLinear;
    m.bias = f.get<bool>("bias", false);
  } else if (kind == "mlp") {
    m.kind = ModelKind::kMlp;
    for (std::int64_t w : f.get<std::vector<std::int64_t>>("hidden", {16})) {
      if (w < 1) throw ConfigError("model.hidden widths must be >= 1");
      m.hidden.push_back(w);
    }
    const auto act = f.get<std::string>("activation", "relu");
    if (act == "relu") {
      m.activation = Activation::kRelu;
    } else if (act == "tanh") {
      m.activation = Activation::kTanh;
    } else if (act == "identity") {
      m.activation = Activation::kIdentity;
    } else {
      throw ConfigError("model.activation: unknown activation '" + act + "'");
    }
  } else {
    throw ConfigError("model.kind: unknown model '" + kind + "'");
  }
  f.finish();
  return m;
}

EvolutionNoise parse_evolution(const json& j) {
  Fields f(expand_shorthand(j), "optimizer.evolution");
  const auto kind = f.require<std::string>("kind");
  EvolutionNoise e;
  if (kind == "zero") {
    e = EvolutionNoise::zero();
  } else if (kind == "fixed_diagonal") {
    e = EvolutionNoise::fixed_diagonal(f.require<double>("value"));
  } else if (kind == "fading_memory") {
    e = EvolutionNoise::fading_memory(f.get<double>("value", 0.01));
  } else {
    throw ConfigError("optimizer.evolution.kind: unknown kind '" + kind + "'");
  }
  f.finish();
  return e;
}

ObservationNoise parse_observation(const json& j) {
  Fields f(expand_shorthand(j), "optimizer.observation");
  const auto kind = f.require<std::string>("kind");
  ObservationNoise o;
  if (kind == "batch_size") {
    o = ObservationNoise::batch_size();
  } else if (kind == "fixed_diagonal") {
    o = ObservationNoise::fixed_diagonal(f.require<double>("value"));
  } else {
    throw ConfigError("optimizer.observation.kind: unknown kind '" + kind + "'");
  }
  f.finish();
  return o;
}

OptimizerSpec parse_optimizer(const json& raw) {
  const json j = expand_shorthand(raw);
  Fields f(j, "optimizer");
  OptimizerSpec o;
  const auto kind = f.require<std::string>("kind");
  if (kind == "kova") {
    o.kind = OptimizerKind::kKova;
    o.kova.learning_rate = f.get<double>("learning_rate", 1.0);
    o.kova.p0_scale = f.get<double>("p0", 1.0);
    o.kova.covariance_ceiling = f.get<double>("covariance_ceiling", 1e4);
    o.kova.noise.evolution = f.has("evolution") ? parse_evolution(f.at("evolution")) : EvolutionNoise::fading_memory(0.01);
    o.kova.noise.observation = f.has("observation") ? parse_observation(f.at("observation")) : ObservationNoise::batch_size();
  } else if (kind == "adam") {
    o.kind = OptimizerKind::kAdam;
    o.adam.learning_rate = f.get<double>("learning_rate", 1e-3);
    o.adam.beta1 = f.get<double>("beta1", 0.9);
    o.adam.beta2 = f.get<double>("beta2", 0.999);
    o.adam.epsilon = f.get<double>("epsilon", 1e-8);
    o.adam_decay = f.get<bool>("decay", false);
  } else if (kind == "sgd") {
    o.kind = OptimizerKind::kSgd;
    o.sgd_learning_rate = f.get<double>("learning_rate", 1e-2);
  } else if (kind == "ktd") {
    o.kind = OptimizerKind::kKtd;
    o.ktd.observation_noise = f.get<double>("observation_noise", 1.0);
    o.ktd.eta = f.get<double>("eta", 0.01);
    o.ktd.p0_scale = f.get<double>("p0", 10.0);
    o.ktd.kappa = f.get<double>("kappa", 0.0);
    o.ktd.learning_rate = f.get<double>("learning_rate", 1.0);
    o.ktd.covariance_ceiling = f.get<double>("covariance_ceiling", 1e4);
  } else {
    throw ConfigError("optimizer.kind: unknown optimizer '" + kind + "'");
  }
  f.finish();
  return o;
}

TargetSpec parse_target(const json& raw, double gamma) {
  const json j = expand_shorthand(raw);
  Fields f(j, "target");
  const auto kind = f.require<std::string>("kind");
  TargetSpec t;
  if (kind == "double_q") {
    t = TargetSpec::double_q(gamma);
  } else if (kind == "dqn") {
    t = TargetSpec::dqn_max(gamma);
  } else if (kind == "k_step") {
    t = TargetSpec::k_step(gamma, f.get<Index>("k", 1));
  } else if (kind == "gae") {
    t = TargetSpec::gae(gamma, f.get<double>("lambda", 0.95), f.get<Index>("horizon", 64));
  } else {
    throw ConfigError("target.kind: unknown target '" + kind + "'");
  }
  f.finish();
  return t;
}

}  // namespace

std::uint64_t repetition_seed(std::uint64_t seed, std::uint64_t repetition) {
  return repetition == 0 ? seed : derive_seed(seed, 1000 + repetition);
}

void apply_override(json& doc, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override has an empty key: " + assignment);
    if (!node->is_object()) throw ConfigError("override path '" + path + "' does not name an object member");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    json& child = (*node)[key];
    if (child.is_null()) child = json::object();
    if (child.is_string()) child = expand_shorthand(child);
    node = &child;
    start = dot + 1;
  }
}

ExperimentConfig parse_experiment(const json& doc, const std::filesystem::path& base_dir) {
  Fields f(doc, "config");
  ExperimentConfig exp;
  exp.label = f.get<std::string>("label", "run");
  if (exp.label.empty() || exp.label.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("config.label must be a non-empty name without path separators");
  }
  TrainConfig& tc = exp.train;
  const double gamma = f.get<double>("gamma", 0.95);
  tc.batch_size = f.get<std::size_t>("batch_size", 32);
  tc.replay_capacity = f.get<std::size_t>("replay_capacity", 10000);
  tc.target_update = f.get<std::uint64_t>("target_update", 200);
  tc.epsilon = f.get<double>("epsilon", 0.1);
  tc.total_timesteps = f.get<std::uint64_t>("total_timesteps", 5000);
  tc.success_window = f.get<std::size_t>("success_window", 50);
  exp.seeds = f.get<std::vector<std::uint64_t>>("seeds", {0});
  if (exp.seeds.empty()) throw ConfigError("config.seeds must not be empty");
  exp.repetitions = f.get<std::uint64_t>("repetitions", 1);
  if (exp.repetitions < 1) throw ConfigError("config.repetitions must be >= 1");

  Fields env(f.at("environment"), "environment");
  const auto env_kind = env.require<std::string>("kind");
  std::string default_task;
  if (env_kind == "maze") {
    default_task = "control";
    std::filesystem::path layout = env.require<std::string>("layout");
    if (layout.is_relative()) layout = base_dir / layout;
    const auto start = env.get<std::string>("start", "fixed_top_left");
    StartPolicy sp;
    if (start == "fixed_top_left") {
      sp = StartPolicy::kFixedTopLeft;
    } else if (start == "random_free_cell") {
      sp = StartPolicy::kRandomFreeCell;
    } else {
      throw ConfigError("environment.start: unknown start policy '" + start + "'");
    }
    tc.environment = MazeSpec::load(layout, sp, env.get<double>("loss_threshold", -50.0));
  } else if (env_kind == "chain") {
    default_task = "policy_eval";
    ChainTask task;
    task.spec.n = env.get<int>("n", 6);
    task.spec.slip = env.get<double>("slip", 0.0);
    task.spec.rewards = env.require<std::vector<double>>("rewards");
    task.spec.gamma = gamma;
    task.policy = env.require<std::vector<double>>("policy");
    tc.environment = std::move(task);
  } else {
    throw ConfigError("environment.kind: unknown environment '" + env_kind + "'");
  }
  env.finish();

  const auto task = f.get<std::string>("task", default_task);
  if (task != default_task) {
    throw ConfigError("config.task '" + task + "' does not match a " + env_kind + " environment");
  }
  tc.model = f.has("model") ? parse_model(f.at("model")) : ModelSpec{};
  if (!f.has("model") && env_kind == "chain") tc.model.kind = ModelKind::kLinear;
  tc.optimizer = f.has("optimizer") ? parse_optimizer(f.at("optimizer")) : parse_optimizer("kova");
  tc.target = parse_target(f.has("target") ? f.at("target") : json(env_kind == "maze" ? "double_q" : "k_step"),
                           gamma);

  std::filesystem::path root = "runs";
  if (const char* env_root = std::getenv("KOVA_OUTPUT_ROOT"); env_root != nullptr && *env_root != '\0') {
    root = env_root;
  }
  if (f.has("output_dir")) {
    std::filesystem::path out = f.require<std::string>("output_dir");
    exp.output_dir = out.is_absolute() ? out : root / out;
  } else {
    exp.output_dir = root / exp.label;
  }
  f.finish();
  tc.validate();
  return exp;
}

ExperimentConfig load_experiment(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  for (const std::string& o : overrides) apply_override(doc, o);
  const std::filesystem::path base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return parse_experiment(doc, base);
}

}  // namespace kova
