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


// Kalman temporal differences: an unscented filter over the value
// parameters with the Q-learning observation
//   g(θ) = Q(s, a; θ) - γ max_a' Q(s', a'; θ),   observed value r.
//
// Each step propagates 2d+1 sigma points through g, which costs two forward
// passes per point. Only single transitions are supported.

#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "kova/filter.hpp"
#include "kova/td_targets.hpp"
#include "kova/value_model.hpp"

namespace kova {

struct SigmaSet {
  MatrixXd points;   // d x (2d+1); column 0 is the mean
  VectorXd weights;  // 2d+1, sums to one
};

/// θ̂ and θ̂ ± columns of chol((d+κ) P), weights κ/(d+κ) and 1/(2(d+κ)).
SigmaSet sigma_points(const VectorXd& mean, const MatrixXd& covariance, double kappa = 0.0);

struct KtdConfig {
  double gamma = 0.95;
  double observation_noise = 1.0;  // scalar P_n
  double eta = 0.01;               // P_v = η P
  double learning_rate = 1.0;
  double kappa = 0.0;
  double p0_scale = 10.0;
  double covariance_ceiling = 1e4;  // as KovaConfig::covariance_ceiling

  void validate() const;
};

using KtdState = FilterState<double>;

struct KtdStepReport {
  double innovation = 0.0;  // r - E[g]
  double innovation_variance = 0.0;
};

/// One filter step on a single transition. `counter` receives 2(2d+1)
/// forward passes; terminal transitions drop the bootstrap term from g but
/// still evaluate it so the cost is the same on every step.
KtdState ktd_step(KtdState state, const Transition& tr, const ValueModel& model, const KtdConfig& cfg,
                  PassCounter* counter = nullptr, KtdStepReport* report = nullptr);

}  // namespace kova
