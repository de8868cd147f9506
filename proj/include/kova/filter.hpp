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

// Kalman optimization for value approximation.
//
// The value parameters follow a random walk θ_t = θ_{t-1} + v_t and each batch
// of target labels is a noisy observation y = h(u; θ_t) + n_t. One optimizer
// step is an extended-Kalman update linearized at the predicted mean:
//
//   predict      θ̂⁻ = θ̂,                    P⁻ = P + P_v
//   innovation   S  = Jᵀ P⁻ J + P_n           (N x N)
//   gain         K  = P⁻ J S⁻¹                 (d x N, only S is factored)
//   update       θ̂' = θ̂⁻ + α K (y - h),      P' = P⁻ - α K S Kᵀ
//
// The updated mean minimizes
//   ½ δᵀ P_n⁻¹ δ + ½ (θ - θ̂⁻)ᵀ (P⁻)⁻¹ (θ - θ̂⁻),   δ = y - h(u; θ),
// for the linearized h; see ekf_objective().

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kova/errors.hpp"
#include "kova/linalg.hpp"
#include "kova/value_model.hpp"

namespace kova {

// ---------------------------------------------------------------------------
// Noise schedules
// ---------------------------------------------------------------------------

enum class EvolutionKind { kZero, kFixedDiagonal, kFadingMemory };

/// Evolution covariance P_v. FadingMemory(η) uses P_v = η/(1-η) · P_{t-1|t-1}.
struct EvolutionNoise {
  EvolutionKind kind = EvolutionKind::kZero;
  double value = 0.0;  // σ_v² or η

  static EvolutionNoise zero() { return {}; }
  static EvolutionNoise fixed_diagonal(double variance) { return {EvolutionKind::kFixedDiagonal, variance}; }
  static EvolutionNoise fading_memory(double eta) { return {EvolutionKind::kFadingMemory, eta}; }

  void validate() const {
    if (kind == EvolutionKind::kFadingMemory && !(value > 0.0 && value < 1.0)) {
      throw ConfigError("fading-memory eta must lie in (0, 1), got " + std::to_string(value));
    }
    if (kind == EvolutionKind::kFixedDiagonal && !(value >= 0.0)) {
      throw ConfigError("evolution variance must be >= 0");
    }
  }
};

enum class ObservationKind { kBatchSize, kFixedDiagonal, kCustomDiagonal };

/// Observation covariance P_n. BatchSize gives N·I.
struct ObservationNoise {
  ObservationKind kind = ObservationKind::kBatchSize;
  double variance = 1.0;
  std::vector<double> weights;

  static ObservationNoise batch_size() { return {}; }
  static ObservationNoise fixed_diagonal(double v) { return {ObservationKind::kFixedDiagonal, v, {}}; }
  static ObservationNoise custom_diagonal(std::vector<double> w) {
    return {ObservationKind::kCustomDiagonal, 0.0, std::move(w)};
  }

  void validate() const {
    if (kind == ObservationKind::kFixedDiagonal && !(variance >= 0.0)) {
      throw ConfigError("observation variance must be >= 0");
    }
    if (kind == ObservationKind::kCustomDiagonal) {
      for (double w : weights) {
        if (!(w > 0.0)) throw ConfigError("custom observation weights must all be > 0");
      }
    }
  }
};

struct NoiseSchedule {
  EvolutionNoise evolution;
  ObservationNoise observation;

  void validate() const {
    evolution.validate();
    observation.validate();
  }
};

struct KovaConfig {
  double learning_rate = 1.0;  // α
  double p0_scale = 1.0;       // P_{0|0} = p0_scale · I
  NoiseSchedule noise;
  // Upper bound on the predicted variances P⁻_ii, 0 to disable. See
  // apply_covariance_ceiling().
  double covariance_ceiling = 1e4;

  void validate() const {
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
      throw ConfigError("KOVA learning rate must lie in (0, 1], got " + std::to_string(learning_rate));
    }
    if (!(p0_scale > 0.0)) throw ConfigError("KOVA p0_scale must be > 0");
    if (!(covariance_ceiling >= 0.0)) throw ConfigError("KOVA covariance_ceiling must be >= 0");
    noise.validate();
  }
};

// ---------------------------------------------------------------------------
// State and batches
// ---------------------------------------------------------------------------

template <typename Scalar = double>
struct FilterState {
  VectorX<Scalar> theta;       // posterior mean
  MatrixX<Scalar> covariance;  // posterior error covariance, d x d
  std::uint64_t step = 0;

  Index dim() const { return theta.size(); }

  static FilterState initial(VectorX<Scalar> theta0, Scalar p0_scale) {
    FilterState s;
    const Index d = theta0.size();
    s.theta = std::move(theta0);
    s.covariance = MatrixX<Scalar>::Identity(d, d) * p0_scale;
    return s;
  }
};

/// One step's observations: N inputs, their targets y, and h and ∇θ h at the
/// parameters the step linearizes around.
template <typename Scalar = double>
struct ObservationBatch {
  std::vector<ModelInput> inputs;
  VectorX<Scalar> targets;
  MatrixX<Scalar> jacobian;  // d x N
  VectorX<Scalar> predictions;

  Index size() const { return targets.size(); }
  VectorX<Scalar> residual() const { return targets - predictions; }

  void validate(Index dim) const {
    const Index n = targets.size();
    if (n < 1) throw ShapeMismatch("observation batch is empty");
    if (predictions.size() != n || jacobian.cols() != n ||
        (!inputs.empty() && static_cast<Index>(inputs.size()) != n)) {
      throw ShapeMismatch("observation batch lengths disagree");
    }
    if (jacobian.rows() != dim) {
      throw ShapeMismatch("jacobian has " + std::to_string(jacobian.rows()) + " rows, filter dimension is " +
                          std::to_string(dim));
    }
    require_finite(targets, "batch targets");
    require_finite(predictions, "batch predictions");
    require_finite(jacobian, "batch jacobian");
  }
};

template <typename Scalar = double>
struct Prediction {
  VectorX<Scalar> theta;
  MatrixX<Scalar> covariance;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// P_v for the given posterior covariance.
template <typename Scalar>
MatrixX<Scalar> evolution_covariance(const EvolutionNoise& noise, const MatrixX<Scalar>& posterior) {
  const Index d = posterior.rows();
  switch (noise.kind) {
    case EvolutionKind::kZero:
      return MatrixX<Scalar>::Zero(d, d);
    case EvolutionKind::kFixedDiagonal:
      return MatrixX<Scalar>::Identity(d, d) * Scalar(noise.value);
    case EvolutionKind::kFadingMemory:
      return posterior * Scalar(noise.value / (1.0 - noise.value));
  }
  return MatrixX<Scalar>::Zero(d, d);
}

/// P ← P + P_v without materializing P_v.
template <typename Scalar>
void add_evolution_noise(const EvolutionNoise& noise, MatrixX<Scalar>& covariance) {
  switch (noise.kind) {
    case EvolutionKind::kZero:
      break;
    case EvolutionKind::kFixedDiagonal:
      covariance.diagonal().array() += Scalar(noise.value);
      break;
    case EvolutionKind::kFadingMemory:
      covariance *= Scalar(1.0 + noise.value / (1.0 - noise.value));
      break;
  }
}

/// Rescale P ← D P D with D_ii = sqrt(ceiling / P_ii) wherever P_ii exceeds
/// the ceiling (D_ii = 1 elsewhere). A congruence keeps P symmetric PSD.
///
/// Fading memory multiplies P by 1/(1-η) every step, so directions the data
/// never excites grow geometrically; once their scale is ~1e13 times the
/// excited variances, rounding in the downdate makes P indefinite. The
/// ceiling stops that growth and leaves coordinates below it untouched.
/// Returns the number of rescaled coordinates.
template <typename Scalar>
Index apply_covariance_ceiling(MatrixX<Scalar>& covariance, double ceiling) {
  if (!(ceiling > 0.0)) return 0;
  const Index d = covariance.rows();
  VectorX<Scalar> scale = VectorX<Scalar>::Ones(d);
  Index hits = 0;
  for (Index i = 0; i < d; ++i) {
    if (covariance(i, i) > Scalar(ceiling)) {
      scale(i) = std::sqrt(Scalar(ceiling) / covariance(i, i));
      ++hits;
    }
  }
  if (hits == 0) return 0;
  covariance = scale.asDiagonal() * covariance * scale.asDiagonal();
  return hits;
}

/// Random-walk prediction: the mean is carried over, the covariance grows by
/// P_v and is then held under the ceiling.
template <typename Scalar>
Prediction<Scalar> predict(const FilterState<Scalar>& state, const KovaConfig& cfg) {
  Prediction<Scalar> p{state.theta, state.covariance};
  add_evolution_noise(cfg.noise.evolution, p.covariance);
  apply_covariance_ceiling(p.covariance, cfg.covariance_ceiling);
  return p;
}

/// P_n for a batch of n observations.
template <typename Scalar = double>
MatrixX<Scalar> build_observation_noise(const ObservationNoise& policy, Index n) {
  if (n < 1) throw ShapeMismatch("observation noise needs N >= 1");
  switch (policy.kind) {
    case ObservationKind::kBatchSize:
      return MatrixX<Scalar>::Identity(n, n) * Scalar(n);
    case ObservationKind::kFixedDiagonal:
      return MatrixX<Scalar>::Identity(n, n) * Scalar(policy.variance);
    case ObservationKind::kCustomDiagonal: {
      if (static_cast<Index>(policy.weights.size()) != n) {
        throw ShapeMismatch("custom observation noise has " + std::to_string(policy.weights.size()) +
                            " weights for a batch of " + std::to_string(n));
      }
      MatrixX<Scalar> m = MatrixX<Scalar>::Zero(n, n);
      for (Index i = 0; i < n; ++i) m(i, i) = Scalar(policy.weights[static_cast<std::size_t>(i)]);
      return m;
    }
  }
  return MatrixX<Scalar>::Identity(n, n);
}

/// S = Jᵀ P⁻ J + P_n, symmetrized.
template <typename Scalar>
MatrixX<Scalar> innovation_covariance(const MatrixX<Scalar>& predicted_covariance, const MatrixX<Scalar>& jacobian,
                                      const MatrixX<Scalar>& observation_noise) {
  const Index d = predicted_covariance.rows();
  const Index n = jacobian.cols();
  if (predicted_covariance.cols() != d || jacobian.rows() != d || observation_noise.rows() != n ||
      observation_noise.cols() != n) {
    throw ShapeMismatch("innovation_covariance: inconsistent dimensions");
  }
  MatrixX<Scalar> s = jacobian.transpose() * (predicted_covariance * jacobian);
  s += observation_noise;
  return symmetrize(s);
}

/// K = P⁻ J S⁻¹ via a Cholesky solve on the N x N innovation covariance.
template <typename Scalar>
MatrixX<Scalar> kalman_gain(const MatrixX<Scalar>& predicted_covariance, const MatrixX<Scalar>& jacobian,
                            const MatrixX<Scalar>& innovation) {
  if (jacobian.rows() != predicted_covariance.rows() || innovation.rows() != jacobian.cols()) {
    throw ShapeMismatch("kalman_gain: inconsistent dimensions");
  }
  const MatrixX<Scalar> cross = predicted_covariance * jacobian;  // d x N
  // S symmetric: K = (S⁻¹ crossᵀ)ᵀ
  return spd_solve(innovation, cross.transpose()).transpose();
}

/// Extra quantities from one step, for metrics and tests.
template <typename Scalar = double>
struct KovaStepReport {
  VectorX<Scalar> innovation;  // y - h at the predicted mean
  MatrixX<Scalar> innovation_covariance;
  Scalar mle_objective = Scalar(0);  // at the predicted mean
  // Objective at the updated mean for the linearized observation function.
  Scalar ekf_objective_linearized = Scalar(0);
  Scalar jitter = Scalar(0);
};

/// One KOVA step. The state is taken by value so callers can move a large
/// covariance through the update without copies:
///   state = kova_step(std::move(state), batch, cfg);
/// The batch Jacobian and predictions must be evaluated at state.theta (the
/// predicted mean equals the previous posterior mean).
///
/// The predicted covariance is kept implicit as P⁻ = c · D P D, with c the
/// fading-memory inflation and D the ceiling rescaling, so the d x d matrix
/// is touched by one product, one rank-N downdate and one scaling pass:
///   W = (DJ)ᵀ P,  S = c W DJ + P_n,  Z = L⁻¹ W  (S = L Lᵀ)
///   θ̂' = θ̂ + α c D Wᵀ S⁻¹ δ,      P' = c D (P - α c ZᵀZ) D.
template <typename Scalar>
FilterState<Scalar> kova_step(FilterState<Scalar> state, const ObservationBatch<Scalar>& batch,
                              const KovaConfig& cfg, KovaStepReport<Scalar>* report = nullptr) {
  const Index d = state.dim();
  if (state.covariance.rows() != d || state.covariance.cols() != d) {
    throw ShapeMismatch("filter covariance does not match parameter dimension");
  }
  batch.validate(d);
  const Index n = batch.size();
  const Scalar alpha = Scalar(cfg.learning_rate);
  MatrixX<Scalar>& cov = state.covariance;

  Scalar c = Scalar(1);
  switch (cfg.noise.evolution.kind) {
    case EvolutionKind::kZero:
      break;
    case EvolutionKind::kFixedDiagonal:
      cov.diagonal().array() += Scalar(cfg.noise.evolution.value);
      break;
    case EvolutionKind::kFadingMemory:
      c = Scalar(1.0 + cfg.noise.evolution.value / (1.0 - cfg.noise.evolution.value));
      break;
  }
  VectorX<Scalar> scale = VectorX<Scalar>::Ones(d);
  if (cfg.covariance_ceiling > 0.0) {
    const Scalar ceiling = Scalar(cfg.covariance_ceiling);
    for (Index i = 0; i < d; ++i) {
      const Scalar v = c * cov(i, i);
      if (v > ceiling) scale(i) = std::sqrt(ceiling / v);
    }
  }

  const MatrixX<Scalar> jac_scaled = scale.asDiagonal() * batch.jacobian;  // DJ
  const MatrixX<Scalar> w = jac_scaled.transpose() * cov;                   // N x d
  const MatrixX<Scalar> obs_noise = build_observation_noise<Scalar>(cfg.noise.observation, n);
  MatrixX<Scalar> innovation_cov = c * (w * jac_scaled) + obs_noise;
  innovation_cov = symmetrize(innovation_cov);

  const CholeskyFactor<Scalar> chol = factorize_spd(innovation_cov);
  const VectorX<Scalar> residual = batch.residual();
  const VectorX<Scalar> weighted = chol.llt.solve(residual);  // S⁻¹ δ
  const VectorX<Scalar> delta_theta = (alpha * c) * scale.cwiseProduct(w.transpose() * weighted);

  MatrixX<Scalar> z = w;
  chol.llt.matrixL().solveInPlace(z);
  cov.template selfadjointView<Eigen::Lower>().rankUpdate(z.transpose(), -alpha * c);
  scale_lower_and_mirror(cov, c, scale);

  if (report != nullptr) {
    const MatrixX<Scalar>& jac = batch.jacobian;
    report->innovation = residual;
    report->innovation_covariance = innovation_cov;
    report->mle_objective = residual.squaredNorm() / (Scalar(2) * Scalar(n));
    const VectorX<Scalar> linearized = residual - jac.transpose() * delta_theta;
    const Scalar data_term = Scalar(0.5) * linearized.dot(spd_solve(obs_noise, linearized).col(0));
    // (P⁻)⁻¹ Δθ = α J S⁻¹ δ
    const Scalar prior_term = Scalar(0.5) * delta_theta.dot(alpha * (jac * weighted));
    report->ekf_objective_linearized = data_term + prior_term;
    report->jitter = chol.jitter;
  }

  state.theta += delta_theta;
  ++state.step;
  return state;
}

/// ½ δᵀ P_n⁻¹ δ + ½ (θ - θ̂⁻)ᵀ (P⁻)⁻¹ (θ - θ̂⁻), with δ = targets - predictions
/// and predictions = h(u; θ).
template <typename Scalar>
Scalar ekf_objective(const VectorX<Scalar>& theta, const VectorX<Scalar>& targets,
                     const VectorX<Scalar>& predictions, const VectorX<Scalar>& predicted_theta,
                     const MatrixX<Scalar>& predicted_covariance, const MatrixX<Scalar>& observation_noise) {
  if (theta.size() != predicted_theta.size() || predicted_covariance.rows() != theta.size()) {
    throw ShapeMismatch("ekf_objective: parameter dimensions disagree");
  }
  if (targets.size() != predictions.size() || observation_noise.rows() != targets.size()) {
    throw ShapeMismatch("ekf_objective: observation dimensions disagree");
  }
  const VectorX<Scalar> delta = targets - predictions;
  const VectorX<Scalar> shift = theta - predicted_theta;
  const Scalar data_term = Scalar(0.5) * delta.dot(spd_solve(observation_noise, delta).col(0));
  const Scalar prior_term = Scalar(0.5) * shift.dot(spd_solve(predicted_covariance, shift).col(0));
  return data_term + prior_term;
}

/// The zero-prior-precision limit: the regularizer is dropped.
template <typename Scalar>
Scalar ekf_objective_without_prior(const VectorX<Scalar>& targets, const VectorX<Scalar>& predictions,
                                   const MatrixX<Scalar>& observation_noise) {
  if (targets.size() != predictions.size() || observation_noise.rows() != targets.size()) {
    throw ShapeMismatch("ekf_objective: observation dimensions disagree");
  }
  const VectorX<Scalar> delta = targets - predictions;
  return Scalar(0.5) * delta.dot(spd_solve(observation_noise, delta).col(0));
}

template <typename Scalar>
Scalar ekf_objective(const VectorX<Scalar>& theta, const ObservationBatch<Scalar>& batch_at_theta,
                     const Prediction<Scalar>& prior, const MatrixX<Scalar>& observation_noise) {
  return ekf_objective(theta, batch_at_theta.targets, batch_at_theta.predictions, prior.theta, prior.covariance,
                       observation_noise);
}

/// (1 / 2N) Σ δ².
template <typename Scalar>
Scalar mle_objective(const VectorX<Scalar>& targets, const VectorX<Scalar>& predictions) {
  if (targets.size() != predictions.size() || targets.size() < 1) {
    throw ShapeMismatch("mle_objective: need N >= 1 matching targets and predictions");
  }
  return (targets - predictions).squaredNorm() / (Scalar(2) * Scalar(targets.size()));
}

template <typename Scalar>
Scalar mle_objective(const ObservationBatch<Scalar>& batch) {
  return mle_objective(batch.targets, batch.predictions);
}

}  // namespace kova
