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


#include "kova/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "kova/errors.hpp"

namespace kova {

VectorXd mle_gradient(const ObservationBatch<double>& batch) {
  batch.validate(batch.jacobian.rows());
  return -(batch.jacobian * batch.residual()) / static_cast<double>(batch.size());
}

VectorXd mle_gradient(const ValueModel& model, const VectorXd& theta, std::span<const ModelInput> inputs,
                      const VectorXd& targets) {
  if (static_cast<Index>(inputs.size()) != targets.size()) {
    throw ShapeMismatch("mle_gradient: inputs and targets differ in length");
  }
  ObservationBatch<double> batch;
  batch.targets = targets;
  std::tie(batch.predictions, batch.jacobian) = evaluate_with_jacobian(model, theta, inputs);
  return mle_gradient(batch);
}

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("Adam learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be > 0");
}

AdamState AdamState::initial(Index dim, AdamConfig cfg) {
  cfg.validate();
  return {VectorXd::Zero(dim), VectorXd::Zero(dim), 0, cfg};
}

double AdamState::current_learning_rate() const {
  if (config.decay_steps == 0) return config.learning_rate;
  const double frac = static_cast<double>(t) / static_cast<double>(config.decay_steps);
  return config.learning_rate * std::max(0.0, 1.0 - frac);
}

VectorXd adam_step(AdamState& state, const VectorXd& theta, const VectorXd& gradient) {
  if (theta.size() != gradient.size() || state.m.size() != theta.size()) {
    throw ShapeMismatch("adam_step: dimensions disagree");
  }
  const AdamConfig& c = state.config;
  const double lr = state.current_learning_rate();
  ++state.t;
  state.m = c.beta1 * state.m + (1.0 - c.beta1) * gradient;
  state.v = c.beta2 * state.v + (1.0 - c.beta2) * gradient.cwiseProduct(gradient);
  const double t = static_cast<double>(state.t);
  const double m_corr = 1.0 - std::pow(c.beta1, t);
  const double v_corr = 1.0 - std::pow(c.beta2, t);
  const VectorXd m_hat = state.m / m_corr;
  const VectorXd v_hat = state.v / v_corr;
  return theta - lr * (m_hat.array() / (v_hat.array().sqrt() + c.epsilon)).matrix();
}

VectorXd sgd_step(const VectorXd& theta, const VectorXd& gradient, double learning_rate) {
  if (theta.size() != gradient.size()) throw ShapeMismatch("sgd_step: dimensions disagree");
  return theta - learning_rate * gradient;
}

}  // namespace kova
