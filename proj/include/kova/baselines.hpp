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


// First-order optimizers on the mean-squared TD objective
//   L(θ) = (1 / 2N) Σ (y_i - h(u_i; θ))².

#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "kova/filter.hpp"
#include "kova/value_model.hpp"

namespace kova {

/// -(1/N) J δ from a batch whose Jacobian and predictions are at θ.
VectorXd mle_gradient(const ObservationBatch<double>& batch);

/// Same, evaluating h and J at θ for the given inputs.
VectorXd mle_gradient(const ValueModel& model, const VectorXd& theta, std::span<const ModelInput> inputs,
                      const VectorXd& targets);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // When nonzero the step size decays linearly to zero over this many steps.
  std::uint64_t decay_steps = 0;

  void validate() const;
};

struct AdamState {
  VectorXd m;
  VectorXd v;
  std::uint64_t t = 0;
  AdamConfig config;

  static AdamState initial(Index dim, AdamConfig cfg);
  /// Step size used by the next update.
  double current_learning_rate() const;
};

/// Bias-corrected Adam update; advances the state in place.
VectorXd adam_step(AdamState& state, const VectorXd& theta, const VectorXd& gradient);

VectorXd sgd_step(const VectorXd& theta, const VectorXd& gradient, double learning_rate);

}  // namespace kova
