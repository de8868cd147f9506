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

// Bellman target labels y(u) and the sample generator that turns stored
// transitions into observation batches.
//
// Every target bootstraps through a frozen parameter vector θ' (the target
// network). The only place the trainable θ enters is the double-Q action
// selection.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kova/filter.hpp"
#include "kova/value_model.hpp"

namespace kova {

struct Transition {
  VectorXd state;
  Index action = 0;
  double reward = 0.0;
  VectorXd next_state;
  bool terminal = false;
};

/// Transitions from one episode, in order.
using Trajectory = std::vector<Transition>;

/// True when each transition's next_state is the following transition's state
/// and only the last one may be terminal.
bool is_contiguous(std::span<const Transition> trajectory);

/// Lowest index among maximal entries.
Index argmax_lowest(const VectorXd& values);

/// Fixed-capacity ring of transitions with its own sampling RNG.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed);

  void push(Transition t);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return ring_.size(); }

  /// Chronological access: 0 is the oldest stored transition.
  const Transition& at(std::size_t index) const;

  /// n distinct chronological indices, uniformly at random, in random order.
  std::vector<std::size_t> sample_indices(std::size_t n);

  /// Up to max_length transitions starting at `index`, stopping after a
  /// terminal one, at the newest entry, or where the chain of states breaks.
  std::vector<Transition> slice(std::size_t index, std::size_t max_length) const;

 private:
  std::vector<Transition> ring_;
  std::size_t head_ = 0;  // next write position
  std::size_t size_ = 0;
  std::mt19937_64 rng_;
};

enum class TargetKind { kDqnMax, kDoubleQ, kKStepV, kGae };

struct TargetSpec {
  TargetKind kind = TargetKind::kDoubleQ;
  double gamma = 0.95;
  Index k = 1;               // k-step lookahead
  double lambda = 0.95;      // GAE mixing
  Index gae_horizon = 64;    // GAE lookahead cap for continuing tasks

  static TargetSpec dqn_max(double gamma) { return {TargetKind::kDqnMax, gamma}; }
  static TargetSpec double_q(double gamma) { return {TargetKind::kDoubleQ, gamma}; }
  static TargetSpec k_step(double gamma, Index k) { return {TargetKind::kKStepV, gamma, k}; }
  static TargetSpec gae(double gamma, double lambda, Index horizon = 64) {
    return {TargetKind::kGae, gamma, 1, lambda, horizon};
  }

  bool is_state_value() const { return kind == TargetKind::kKStepV || kind == TargetKind::kGae; }
  void validate() const;
};

/// The model plus online θ and frozen θ' parameters used to build a batch.
struct TargetModels {
  const ValueModel& model;
  const VectorXd& online;
  const VectorXd& target;
};

/// Counts model forward passes; a batched pass counts once.
struct PassCounter {
  std::uint64_t passes = 0;
};

/// r + γ max_a' Q(s', a'; θ'), or r for terminal transitions.
double dqn_target(const Transition& tr, const ValueModel& model, const VectorXd& target_theta, double gamma);

/// r + γ Q(s', argmax_a Q(s', a; θ); θ'), or r for terminal transitions.
double double_q_target(const Transition& tr, const ValueModel& model, const VectorXd& online_theta,
                       const VectorXd& target_theta, double gamma);

/// Σ_{i<k} γ^i r_{m+i} + γ^k V(s_{m+k}; θ'), truncated at a terminal transition
/// (no bootstrap) or at the end of the slice (bootstrap from its last s').
double k_step_v_target(std::span<const Transition> slice, const ValueModel& model, const VectorXd& target_theta,
                       double gamma, Index k, PassCounter* counter = nullptr);

/// Σ_i (γλ)^i δ_{m+i} + V(s_m; θ') over the rest of the trajectory, with
/// δ_i = r_i + γ V(s_{i+1}; θ') - V(s_i; θ') and V(terminal) = 0.
/// Computed through the equivalent λ-return recursion
///   G_i = r_i + γ ((1-λ) V(s_{i+1}) + λ G_{i+1}).
double gae_target(std::span<const Transition> trajectory, std::size_t m, const ValueModel& model,
                  const VectorXd& target_theta, double gamma, double lambda, PassCounter* counter = nullptr);

/// Draw n transitions without replacement and build the observation batch:
/// targets per `spec`, predictions and Jacobian at the online parameters.
ObservationBatch<double> sample_batch(ReplayBuffer& buffer, std::size_t n, const TargetSpec& spec,
                                      const TargetModels& models, PassCounter* counter = nullptr);

/// Build a batch from explicit transitions (no sampling).
ObservationBatch<double> make_batch(std::span<const Transition> transitions, const TargetSpec& spec,
                                    const TargetModels& models, PassCounter* counter = nullptr);

/// Line-delimited JSON, one transition per line, fields in this order:
///   {"s":[...],"a":<int>,"r":<real>,"s_next":[...],"terminal":<bool>}
void write_transitions_jsonl(std::ostream& out, std::span<const Transition> transitions);
std::vector<Transition> read_transitions_jsonl(std::istream& in);

}  // namespace kova
