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


#include "kova/chain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kova/errors.hpp"

namespace kova {
namespace {

int move(const ChainMdpSpec& spec, int state, int direction) {
  return std::clamp(state + (direction == kChainRight ? 1 : -1), 0, spec.n - 1);
}

void check_policy(const ChainMdpSpec& spec, const ChainPolicy& policy) {
  if (static_cast<int>(policy.size()) != spec.n) throw ShapeMismatch("chain policy needs one entry per state");
  for (double p : policy) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("chain policy probabilities must lie in [0, 1]");
  }
}

}  // namespace

void ChainMdpSpec::validate() const {
  if (n < 1) throw ConfigError("chain needs at least one state");
  if (!(slip >= 0.0 && slip < 1.0)) throw ConfigError("chain slip must lie in [0, 1)");
  if (static_cast<int>(rewards.size()) != n) {
    throw ConfigError("chain has " + std::to_string(n) + " states but " + std::to_string(rewards.size()) +
                      " rewards");
  }
  for (double r : rewards) {
    if (!std::isfinite(r)) throw ConfigError("chain rewards must be finite");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("chain gamma must lie in [0, 1)");
}

ChainStep chain_step(const ChainMdpSpec& spec, int state, int action, std::mt19937_64& rng) {
  if (state < 0 || state >= spec.n) throw IndexOutOfRange("chain state " + std::to_string(state));
  if (action != kChainLeft && action != kChainRight) throw IndexOutOfRange("chain action " + std::to_string(action));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const bool slipped = spec.slip > 0.0 && u(rng) < spec.slip;
  const int direction = slipped ? 1 - action : action;
  return {move(spec, state, direction), spec.rewards[static_cast<std::size_t>(state)]};
}

int chain_sample_action(const ChainPolicy& policy, int state, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < policy[static_cast<std::size_t>(state)] ? kChainRight : kChainLeft;
}

Eigen::VectorXd chain_features(const ChainMdpSpec& spec, int state) {
  if (state < 0 || state >= spec.n) throw IndexOutOfRange("chain state " + std::to_string(state));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(spec.n);
  x(state) = 1.0;
  return x;
}

Eigen::MatrixXd chain_transition_matrix(const ChainMdpSpec& spec, const ChainPolicy& policy) {
  spec.validate();
  check_policy(spec, policy);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(spec.n, spec.n);
  for (int s = 0; s < spec.n; ++s) {
    const double right = policy[static_cast<std::size_t>(s)];
    // P(move right) = π(r)(1-p) + π(l)p
    const double go_right = right * (1.0 - spec.slip) + (1.0 - right) * spec.slip;
    p(s, move(spec, s, kChainRight)) += go_right;
    p(s, move(spec, s, kChainLeft)) += 1.0 - go_right;
  }
  return p;
}

Eigen::VectorXd chain_exact_value(const ChainMdpSpec& spec, const ChainPolicy& policy) {
  const Eigen::MatrixXd p = chain_transition_matrix(spec, policy);
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(spec.n, spec.n) - spec.gamma * p;
  const Eigen::Map<const Eigen::VectorXd> r(spec.rewards.data(), spec.n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw SingularSystem("(I - gamma P) is singular");
  return lu.solve(r);
}

}  // namespace kova
