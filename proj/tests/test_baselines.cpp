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
#include <vector>

#include <gtest/gtest.h>

#include "kova/baselines.hpp"
#include "oracles.hpp"

namespace kova {
namespace {

TEST(MleGradient, ZeroResidualGivesZero) {
  std::mt19937_64 rng(81);
  const ValueModel m = ValueModel::mlp({3, 4, 2}, Activation::kTanh);
  const VectorXd theta = oracle::random_vector(m.parameter_count(), rng);
  std::vector<ModelInput> in{{oracle::random_vector(3, rng), 0}, {oracle::random_vector(3, rng), 1}};
  const VectorXd y = evaluate(m, theta, in);
  EXPECT_EQ(mle_gradient(m, theta, in, y), VectorXd::Zero(m.parameter_count()));
}

TEST(MleGradient, LinearSingleSample) {
  const ValueModel m = ValueModel::linear(2);
  VectorXd theta(2);
  theta << 1, -1;
  VectorXd x(2);
  x << 3, 0.5;
  const std::vector<ModelInput> in{{x, 0}};
  const double delta = 4.0 - (3.0 - 0.5);
  EXPECT_LT((mle_gradient(m, theta, in, VectorXd::Constant(1, 4.0)) + delta * x).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(MleGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(82);
  const std::vector<Index> widths{4, 6, 3};
  const ValueModel m = ValueModel::mlp(widths, Activation::kTanh);
  const VectorXd theta = oracle::random_vector(m.parameter_count(), rng);
  std::vector<ModelInput> in;
  for (int i = 0; i < 7; ++i) in.push_back({oracle::random_vector(4, rng), i % 3});
  const VectorXd y = oracle::random_vector(7, rng);
  auto loss = [&](const VectorXd& t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) {
      const double h = oracle::mlp_forward(widths, true, 2, t, in[i].features)(in[i].action);
      acc += (y(static_cast<Index>(i)) - h) * (y(static_cast<Index>(i)) - h);
    }
    return acc / (2.0 * static_cast<double>(in.size()));
  };
  const VectorXd fd = oracle::central_gradient(loss, theta, 1e-6);
  const VectorXd g = mle_gradient(m, theta, in, y);
  EXPECT_LE((g - fd).norm(), 1e-5 * std::max(1.0, fd.norm()));
}

TEST(MleGradient, ShapeMismatch) {
  const ValueModel m = ValueModel::linear(2);
  const std::vector<ModelInput> in{{VectorXd::Ones(2), 0}};
  EXPECT_THROW(mle_gradient(m, VectorXd::Zero(2), in, VectorXd::Zero(2)), ShapeMismatch);
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  VectorXd g(3);
  g << 5.0, -0.002, 300.0;
  for (double scale : {1.0, 1e-3, 1e4}) {
    AdamState st = AdamState::initial(3, cfg);
    const VectorXd step = adam_step(st, VectorXd::Zero(3), scale * g);
    EXPECT_NEAR(step(0), -0.01, 1e-7);
    EXPECT_NEAR(step(1), 0.01, 1e-4);
    EXPECT_NEAR(step(2), -0.01, 1e-7);
    EXPECT_EQ(st.t, 1u);
  }
}

TEST(Adam, ZeroGradientNeverMoves) {
  AdamState st = AdamState::initial(2, AdamConfig{});
  VectorXd theta(2);
  theta << 0.3, -4.0;
  for (int i = 0; i < 20; ++i) theta = adam_step(st, theta, VectorXd::Zero(2));
  EXPECT_EQ(theta(0), 0.3);
  EXPECT_EQ(theta(1), -4.0);
}

// f(θ) = θ², θ₀ = 1, lr = 0.1, default β and ε. Reference values from a
// 30-digit evaluation of the bias-corrected recurrences.
TEST(Adam, ThreeStepTable) {
  const double theta_ref[] = {0.9000000004999999975, 0.80041222869179214524, 0.70158627294602954516};
  const double m_ref[] = {0.2, 0.3600000000999999995, 0.4840824458283584286};
  const double v_ref[] = {0.004, 0.007236000003599999983, 0.0097914029469538470592};
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  AdamState st = AdamState::initial(1, cfg);
  VectorXd theta = VectorXd::Ones(1);
  for (int t = 0; t < 3; ++t) {
    theta = adam_step(st, theta, 2.0 * theta);
    EXPECT_NEAR(theta(0), theta_ref[t], 1e-15);
    EXPECT_NEAR(st.m(0), m_ref[t], 1e-15);
    EXPECT_NEAR(st.v(0), v_ref[t], 1e-14 * v_ref[t]);
  }
}

TEST(Adam, LinearDecay) {
  AdamConfig cfg;
  cfg.learning_rate = 3e-4;
  cfg.decay_steps = 4;
  AdamState st = AdamState::initial(1, cfg);
  const double expect[] = {3e-4, 2.25e-4, 1.5e-4, 0.75e-4, 0.0, 0.0};
  for (double e : expect) {
    EXPECT_NEAR(st.current_learning_rate(), e, 1e-18);
    adam_step(st, VectorXd::Zero(1), VectorXd::Ones(1));
  }
}

TEST(Adam, Validation) {
  AdamConfig cfg;
  cfg.beta1 = 1.0;
  EXPECT_THROW(AdamState::initial(1, cfg), ConfigError);
  AdamState st = AdamState::initial(2, AdamConfig{});
  EXPECT_THROW(adam_step(st, VectorXd::Zero(3), VectorXd::Zero(3)), ShapeMismatch);
}

TEST(Sgd, Examples) {
  VectorXd theta(2);
  theta << 0.5, 1.5;
  EXPECT_EQ(sgd_step(theta, VectorXd::Zero(2), 0.3), theta);
  VectorXd g(2);
  g << 1, 2;
  VectorXd expect(2);
  expect << -1, -2;
  EXPECT_EQ(sgd_step(VectorXd::Zero(2), g, 1.0), expect);
  EXPECT_THROW(sgd_step(theta, VectorXd::Zero(3), 0.1), ShapeMismatch);
}

TEST(Sgd, MonotoneOnQuadraticBowl) {
  std::mt19937_64 rng(83);
  const MatrixXd a = oracle::random_spd(6, rng);
  const VectorXd b = oracle::random_vector(6, rng);
  auto f = [&](const VectorXd& x) { return 0.5 * x.dot(a * x) - b.dot(x); };
  const double lr = 0.5 / oracle::jacobi_eigenvalues(a).back();
  VectorXd x = VectorXd::Zero(6);
  double prev = f(x);
  for (int i = 0; i < 100; ++i) {
    x = sgd_step(x, a * x - b, lr);
    const double cur = f(x);
    EXPECT_LT(cur, prev);
    prev = cur;
  }
}

}  // namespace
}  // namespace kova
