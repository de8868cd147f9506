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


#include "kova/ktd.hpp"

#include <cmath>
#include <string>

#include "kova/errors.hpp"
#include "kova/linalg.hpp"

namespace kova {

SigmaSet sigma_points(const VectorXd& mean, const MatrixXd& covariance, double kappa) {
  require_square(covariance, "sigma point covariance");
  const Index d = mean.size();
  if (covariance.rows() != d) throw ShapeMismatch("sigma points: mean and covariance disagree");
  const double scale = static_cast<double>(d) + kappa;
  if (!(scale > 0.0)) throw ConfigError("sigma points need d + kappa > 0");

  const MatrixXd scaled = covariance * scale;
  const CholeskyFactor<double> chol = factorize_spd(scaled);
  const MatrixXd l = chol.lower();

  SigmaSet out;
  out.points.resize(d, 2 * d + 1);
  out.points.col(0) = mean;
  out.points.middleCols(1, d) = l.colwise() + mean;
  out.points.middleCols(1 + d, d) = (-l).colwise() + mean;
  out.weights = VectorXd::Constant(2 * d + 1, 1.0 / (2.0 * scale));
  out.weights(0) = kappa / scale;
  return out;
}

void KtdConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("KTD gamma must lie in [0, 1)");
  if (!(observation_noise >= 0.0)) throw ConfigError("KTD observation noise must be >= 0");
  if (!(eta >= 0.0)) throw ConfigError("KTD eta must be >= 0");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("KTD learning rate must lie in (0, 1]");
  if (!(p0_scale > 0.0)) throw ConfigError("KTD p0_scale must be > 0");
  if (!(covariance_ceiling >= 0.0)) throw ConfigError("KTD covariance_ceiling must be >= 0");
}

KtdState ktd_step(KtdState state, const Transition& tr, const ValueModel& model, const KtdConfig& cfg,
                  PassCounter* counter, KtdStepReport* report) {
  const Index d = state.dim();
  if (model.parameter_count() != d) throw ShapeMismatch("KTD state does not match the model");
  if (tr.action < 0 || tr.action >= model.head_count()) throw IndexOutOfRange("KTD transition action");

  MatrixXd& cov = state.covariance;
  cov *= 1.0 + cfg.eta;
  apply_covariance_ceiling(cov, cfg.covariance_ceiling);
  const SigmaSet sigma = sigma_points(state.theta, cov, cfg.kappa);
  std::uint64_t passes = 0;
  VectorXd g(sigma.points.cols());
  for (Index i = 0; i < sigma.points.cols(); ++i) {
    const VectorXd theta_i = sigma.points.col(i);
    const double q = model.forward(theta_i, tr.state)(tr.action, 0);
    const double bootstrap = model.forward(theta_i, tr.next_state).col(0).maxCoeff();
    passes += 2;
    g(i) = tr.terminal ? q : q - cfg.gamma * bootstrap;
  }
  if (counter != nullptr) counter->passes += passes;

  const double g_mean = sigma.weights.dot(g);
  const VectorXd g_dev = g.array() - g_mean;
  const double p_yy = sigma.weights.dot(g_dev.cwiseProduct(g_dev)) + cfg.observation_noise;
  // Σ wᵢ (θᵢ - θ̂)(gᵢ - ḡ); the mean column has zero spread.
  const VectorXd p_theta_y = (sigma.points.colwise() - state.theta) * sigma.weights.cwiseProduct(g_dev);
  if (!(p_yy > 0.0)) throw NotPositiveDefinite("KTD innovation variance is not positive");

  const VectorXd gain = p_theta_y / p_yy;
  const double innovation = tr.reward - g_mean;
  state.theta += cfg.learning_rate * gain * innovation;
  cov.selfadjointView<Eigen::Lower>().rankUpdate(gain, -cfg.learning_rate * p_yy);
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
  ++state.step;

  if (report != nullptr) {
    report->innovation = innovation;
    report->innovation_variance = p_yy;
  }
  return state;
}

}  // namespace kova
