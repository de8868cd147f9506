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


#include "kova/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>

#include <Eigen/Dense>

#include "kova/chain.hpp"
#include "kova/errors.hpp"
#include "kova/filter.hpp"
#include "kova/linalg.hpp"
#include "kova/value_model.hpp"

namespace kova {
namespace {

using Rng = std::mt19937_64;

MatrixXd random_matrix(Rng& rng, Index rows, Index cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  }
  return m;
}

MatrixXd random_spd(Rng& rng, Index d) {
  const MatrixXd a = random_matrix(rng, d, d);
  return a * a.transpose() / static_cast<double>(d) + MatrixXd::Identity(d, d) * 0.5;
}

Index uniform_index(Rng& rng, Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng); }

double relative_frobenius(const MatrixXd& a, const MatrixXd& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

SuiteResult gain_identity(Rng& rng) {
  SuiteResult out{"gain-identity", {}};
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const Index d = uniform_index(rng, 1, 50);
    const Index n = uniform_index(rng, 1, 10);
    const MatrixXd p = random_spd(rng, d);
    const MatrixXd j = random_matrix(rng, d, n);
    const MatrixXd pn = random_spd(rng, n);
    const MatrixXd s = innovation_covariance(p, j, pn);
    const MatrixXd k = kalman_gain(p, j, s);
    // Information form: (P⁻¹ + J Pn⁻¹ Jᵀ)⁻¹ J Pn⁻¹ with explicit inverses.
    const MatrixXd pn_inv = pn.fullPivLu().inverse();
    const MatrixXd info = p.fullPivLu().inverse() + j * pn_inv * j.transpose();
    const MatrixXd k_info = info.fullPivLu().inverse() * j * pn_inv;
    worst = std::max(worst, relative_frobenius(k, k_info));
  }
  out.checks.push_back({"100 random gains, relative Frobenius error", worst, 1e-8});
  return out;
}

SuiteResult linear_gaussian(Rng& rng) {
  SuiteResult out{"linear-gaussian", {}};
  const Index d = 8;
  const Index n = 5;
  const ValueModel model = ValueModel::linear(d);
  KovaConfig cfg;
  cfg.p0_scale = 2.0;
  cfg.noise.evolution = EvolutionNoise::zero();
  cfg.noise.observation = ObservationNoise::fixed_diagonal(0.3);
  const VectorXd theta0 = random_matrix(rng, d, 1);
  FilterState<double> state = FilterState<double>::initial(theta0, cfg.p0_scale);

  MatrixXd precision = MatrixXd::Identity(d, d) / cfg.p0_scale;
  VectorXd info = precision * theta0;
  for (int b = 0; b < 20; ++b) {
    const MatrixXd x = random_matrix(rng, d, n);
    const VectorXd y = random_matrix(rng, n, 1);
    ObservationBatch<double> batch;
    batch.targets = y;
    batch.jacobian = x;
    batch.predictions = x.transpose() * state.theta;
    state = kova_step(std::move(state), batch, cfg);
    precision += x * x.transpose() / 0.3;
    info += x * y / 0.3;
  }
  const MatrixXd cov = precision.fullPivLu().inverse();
  const VectorXd mean = cov * info;
  out.checks.push_back({"posterior mean, relative error", (state.theta - mean).norm() / mean.norm(), 1e-6});
  out.checks.push_back({"posterior covariance, relative error", relative_frobenius(state.covariance, cov), 1e-6});
  return out;
}

SuiteResult objective_limit(Rng& rng) {
  SuiteResult out{"corollary1", {}};
  double worst = 0.0;
  for (int c = 0; c < 1000; ++c) {
    const Index n = uniform_index(rng, 1, 32);
    const VectorXd y = random_matrix(rng, n, 1);
    const VectorXd h = random_matrix(rng, n, 1);
    const MatrixXd pn = build_observation_noise<double>(ObservationNoise::batch_size(), n);
    const double ekf = ekf_objective_without_prior(y, h, pn);
    double mle = 0.0;
    for (Index i = 0; i < n; ++i) mle += (y(i) - h(i)) * (y(i) - h(i));
    mle /= 2.0 * static_cast<double>(n);
    worst = std::max(worst, std::abs(ekf - mle));
  }
  out.checks.push_back({"1000 random batches, |L_ekf - L_mle|", worst, 1e-12});
  return out;
}

SuiteResult jacobian_suite(Rng& rng) {
  SuiteResult out{"jacobian", {}};
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const Index in = uniform_index(rng, 1, 6);
    const Index hidden = uniform_index(rng, 1, 8);
    const Index heads = uniform_index(rng, 1, 4);
    const Activation act = c % 2 == 0 ? Activation::kTanh : Activation::kRelu;
    const ValueModel model = ValueModel::mlp({in, hidden, heads}, act);
    const VectorXd theta = init_parameters(model, rng());
    std::vector<ModelInput> inputs;
    for (int i = 0; i < 3; ++i) inputs.push_back({random_matrix(rng, in, 1), uniform_index(rng, 0, heads - 1)});
    const MatrixXd jac = jacobian(model, theta, inputs);
    MatrixXd fd(jac.rows(), jac.cols());
    const double h = 1e-6;
    for (Index p = 0; p < theta.size(); ++p) {
      VectorXd plus = theta;
      VectorXd minus = theta;
      plus(p) += h;
      minus(p) -= h;
      fd.row(p) = ((evaluate(model, plus, inputs) - evaluate(model, minus, inputs)) / (2.0 * h)).transpose();
    }
    worst = std::max(worst, (jac - fd).norm() / std::max(fd.norm(), 1.0));
  }
  out.checks.push_back({"100 random MLPs, central differences", worst, 1e-5});
  return out;
}

SuiteResult chain_oracle(Rng& rng) {
  SuiteResult out{"chain-oracle", {}};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ChainMdpSpec spec;
  spec.n = 6;
  spec.slip = 0.2 * u(rng);
  spec.gamma = 0.9;
  ChainPolicy policy;
  for (int s = 0; s < spec.n; ++s) {
    spec.rewards.push_back(u(rng));
    policy.push_back(u(rng));
  }
  const VectorXd v = chain_exact_value(spec, policy);
  const MatrixXd p = chain_transition_matrix(spec, policy);
  const Eigen::Map<const VectorXd> r(spec.rewards.data(), spec.n);
  const VectorXd residual = v - spec.gamma * p * v - r;
  out.checks.push_back({"Bellman residual, max abs", residual.cwiseAbs().maxCoeff(), 1e-10});

  VectorXd iterate = VectorXd::Zero(spec.n);
  for (int k = 0; k < 2000; ++k) iterate = r + spec.gamma * p * iterate;
  out.checks.push_back({"iterative evaluation, max abs difference", (iterate - v).cwiseAbs().maxCoeff(), 1e-10});
  return out;
}

SuiteResult psd_suite(Rng& rng) {
  SuiteResult out{"psd", {}};
  const ValueModel model = ValueModel::mlp({10, 36, 4}, Activation::kTanh);  // d = 544
  KovaConfig cfg;
  cfg.noise.evolution = EvolutionNoise::fading_memory(0.01);
  FilterState<double> state = FilterState<double>::initial(init_parameters(model, rng()), 1.0);
  double worst_asym = 0.0;
  double worst_eig = 0.0;
  for (int t = 0; t < 200; ++t) {
    std::vector<ModelInput> inputs;
    for (int i = 0; i < 8; ++i) inputs.push_back({random_matrix(rng, 10, 1), uniform_index(rng, 0, 3)});
    ObservationBatch<double> batch;
    batch.inputs = inputs;
    std::tie(batch.predictions, batch.jacobian) = evaluate_with_jacobian(model, state.theta, inputs);
    batch.targets = random_matrix(rng, 8, 1);
    state = kova_step(std::move(state), batch, cfg);
    if (t % 20 == 19) {
      const Index d = state.dim();
      const double floor = state.covariance.trace() / static_cast<double>(d);
      worst_asym = std::max(worst_asym, relative_asymmetry(state.covariance));
      worst_eig = std::max(worst_eig, -min_eigenvalue(state.covariance) / floor);
    }
  }
  out.checks.push_back({"relative asymmetry", worst_asym, 1e-10});
  out.checks.push_back({"-min eigenvalue / (trace/d)", worst_eig, 1e-8});
  return out;
}

}  // namespace

bool SuiteResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed(); });
}

double SuiteResult::worst_error() const {
  double w = 0.0;
  for (const CheckResult& c : checks) w = std::max(w, c.error);
  return w;
}

const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names{"gain-identity", "linear-gaussian", "corollary1",
                                              "jacobian",      "chain-oracle",    "psd"};
  return names;
}

SuiteResult run_verify_suite(const std::string& name, std::uint64_t seed) {
  Rng rng(seed);
  if (name == "gain-identity") return gain_identity(rng);
  if (name == "linear-gaussian") return linear_gaussian(rng);
  if (name == "corollary1") return objective_limit(rng);
  if (name == "jacobian") return jacobian_suite(rng);
  if (name == "chain-oracle") return chain_oracle(rng);
  if (name == "psd") return psd_suite(rng);
  throw ConfigError("unknown verify suite '" + name + "'");
}

}  // namespace kova
