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


// A line of n states with two actions and action slip, used where the exact
// value function of a fixed policy is needed.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace kova {

struct ChainMdpSpec {
  int n = 6;
  double slip = 0.0;             // probability the opposite move is taken
  std::vector<double> rewards;   // r(s), paid on leaving s
  double gamma = 0.9;

  void validate() const;
};

inline constexpr int kChainLeft = 0;
inline constexpr int kChainRight = 1;

/// π(right | s) per state.
using ChainPolicy = std::vector<double>;

struct ChainStep {
  int next_state = 0;
  double reward = 0.0;
};

ChainStep chain_step(const ChainMdpSpec& spec, int state, int action, std::mt19937_64& rng);
int chain_sample_action(const ChainPolicy& policy, int state, std::mt19937_64& rng);

/// One-hot feature vector for a state.
Eigen::VectorXd chain_features(const ChainMdpSpec& spec, int state);

/// n x n state transition matrix under the policy; rows sum to one.
Eigen::MatrixXd chain_transition_matrix(const ChainMdpSpec& spec, const ChainPolicy& policy);

/// Solves (I - γ P_π) V = R directly.
Eigen::VectorXd chain_exact_value(const ChainMdpSpec& spec, const ChainPolicy& policy);

}  // namespace kova
