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

#include "kova/td_targets.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_set>

#include <json.hpp>

#include "kova/errors.hpp"

namespace kova {
namespace {

void count(PassCounter* counter, std::uint64_t n = 1) {
  if (counter != nullptr) counter->passes += n;
}

VectorXd heads_at(const ValueModel& model, const VectorXd& theta, const VectorXd& state) {
  return model.forward(theta, state);
}

MatrixXd stack_next_states(std::span<const Transition> ts) {
  MatrixXd x(ts.front().next_state.size(), static_cast<Index>(ts.size()));
  for (std::size_t i = 0; i < ts.size(); ++i) x.col(static_cast<Index>(i)) = ts[i].next_state;
  return x;
}

}  // namespace

bool is_contiguous(std::span<const Transition> trajectory) {
  for (std::size_t i = 0; i + 1 < trajectory.size(); ++i) {
    if (trajectory[i].terminal) return false;
    if (trajectory[i].next_state != trajectory[i + 1].state) return false;
  }
  return true;
}

Index argmax_lowest(const VectorXd& values) {
  if (values.size() == 0) throw ShapeMismatch("argmax of an empty vector");
  Index best = 0;
  for (Index i = 1; i < values.size(); ++i) {
    if (values(i) > values(best)) best = i;
  }
  return best;
}

// ---------------------------------------------------------------------------
// ReplayBuffer
// ---------------------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed) : ring_(capacity), rng_(seed) {
  if (capacity == 0) throw ConfigError("replay capacity must be >= 1");
}

void ReplayBuffer::push(Transition t) {
  if (!std::isfinite(t.reward)) throw NonFiniteValue("transition reward is not finite");
  ring_[head_] = std::move(t);
  head_ = (head_ + 1) % ring_.size();
  size_ = std::min(size_ + 1, ring_.size());
}

const Transition& ReplayBuffer::at(std::size_t index) const {
  if (index >= size_) throw IndexOutOfRange("replay index " + std::to_string(index) + " >= size");
  const std::size_t oldest = (head_ + ring_.size() - size_) % ring_.size();
  return ring_[(oldest + index) % ring_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n) {
  if (n > size_) {
    throw InsufficientData("cannot sample " + std::to_string(n) + " transitions from a buffer of " +
                           std::to_string(size_));
  }
  // Floyd's algorithm, then a shuffle so the order is uniform as well.
  std::vector<std::size_t> picked;
  picked.reserve(n);
  std::unordered_set<std::size_t> seen;
  seen.reserve(2 * n);
  for (std::size_t j = size_ - n; j < size_; ++j) {
    std::uniform_int_distribution<std::size_t> dist(0, j);
    const std::size_t t = dist(rng_);
    const std::size_t chosen = seen.contains(t) ? j : t;
    seen.insert(chosen);
    picked.push_back(chosen);
  }
  std::shuffle(picked.begin(), picked.end(), rng_);
  return picked;
}

std::vector<Transition> ReplayBuffer::slice(std::size_t index, std::size_t max_length) const {
  std::vector<Transition> out;
  for (std::size_t i = index; i < size_ && out.size() < max_length; ++i) {
    const Transition& t = at(i);
    if (!out.empty() && out.back().next_state != t.state) break;
    out.push_back(t);
    if (t.terminal) break;
  }
  if (out.empty()) throw IndexOutOfRange("replay slice start out of range");
  return out;
}

// ---------------------------------------------------------------------------
// Targets
// ---------------------------------------------------------------------------

void TargetSpec::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (gae_horizon < 1) throw ConfigError("gae horizon must be >= 1");
}

double dqn_target(const Transition& tr, const ValueModel& model, const VectorXd& target_theta, double gamma) {
  if (tr.terminal) return tr.reward;
  return tr.reward + gamma * heads_at(model, target_theta, tr.next_state).maxCoeff();
}

double double_q_target(const Transition& tr, const ValueModel& model, const VectorXd& online_theta,
                       const VectorXd& target_theta, double gamma) {
  if (tr.terminal) return tr.reward;
  const Index a = argmax_lowest(heads_at(model, online_theta, tr.next_state));
  return tr.reward + gamma * heads_at(model, target_theta, tr.next_state)(a);
}

double k_step_v_target(std::span<const Transition> slice, const ValueModel& model, const VectorXd& target_theta,
                       double gamma, Index k, PassCounter* counter) {
  if (slice.empty()) throw EmptySlice("k-step target needs at least one transition");
  if (k < 1) throw ConfigError("k must be >= 1");
  const std::size_t steps = std::min(slice.size(), static_cast<std::size_t>(k));
  double ret = 0.0;
  double discount = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    ret += discount * slice[i].reward;
    if (slice[i].terminal) return ret;
    discount *= gamma;
  }
  count(counter);
  return ret + discount * heads_at(model, target_theta, slice[steps - 1].next_state)(0);
}

double gae_target(std::span<const Transition> trajectory, std::size_t m, const ValueModel& model,
                  const VectorXd& target_theta, double gamma, double lambda, PassCounter* counter) {
  if (m >= trajectory.size()) {
    throw IndexOutOfRange("gae index " + std::to_string(m) + " outside trajectory of length " +
                          std::to_string(trajectory.size()));
  }
  std::size_t end = m;  // last index used
  while (end + 1 < trajectory.size() && !trajectory[end].terminal) ++end;

  // V(s_{i+1}; θ') for i in [m, end], one batched pass.
  const auto tail = trajectory.subspan(m, end - m + 1);
  const MatrixXd next_values = model.forward(target_theta, stack_next_states(tail));
  count(counter);

  const std::size_t last = end - m;
  double g = trajectory[end].terminal ? trajectory[end].reward
                                      : trajectory[end].reward + gamma * next_values(0, static_cast<Index>(last));
  for (std::size_t j = last; j-- > 0;) {
    const Transition& t = trajectory[m + j];
    const double v_next = next_values(0, static_cast<Index>(j));
    g = t.reward + gamma * ((1.0 - lambda) * v_next + lambda * g);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Batches
// ---------------------------------------------------------------------------

namespace {

void fill_predictions(ObservationBatch<double>& batch, const TargetModels& models, PassCounter* counter) {
  auto [h, jac] = evaluate_with_jacobian(models.model, models.online, batch.inputs);
  count(counter);
  batch.predictions = std::move(h);
  batch.jacobian = std::move(jac);
}

VectorXd q_targets(std::span<const Transition> ts, const TargetSpec& spec, const TargetModels& models,
                   PassCounter* counter) {
  const MatrixXd next = stack_next_states(ts);
  const MatrixXd q_target = models.model.forward(models.target, next);
  count(counter);
  MatrixXd q_online;
  if (spec.kind == TargetKind::kDoubleQ) {
    q_online = models.model.forward(models.online, next);
    count(counter);
  }
  VectorXd y(static_cast<Index>(ts.size()));
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const Transition& t = ts[i];
    const auto col = static_cast<Index>(i);
    if (t.terminal) {
      y(col) = t.reward;
    } else if (spec.kind == TargetKind::kDqnMax) {
      y(col) = t.reward + spec.gamma * q_target.col(col).maxCoeff();
    } else {
      const Index a = argmax_lowest(q_online.col(col));
      y(col) = t.reward + spec.gamma * q_target(a, col);
    }
  }
  return y;
}

double state_value_target(std::span<const Transition> slice, const TargetSpec& spec, const TargetModels& models,
                          PassCounter* counter) {
  if (spec.kind == TargetKind::kKStepV) {
    return k_step_v_target(slice, models.model, models.target, spec.gamma, spec.k, counter);
  }
  return gae_target(slice, 0, models.model, models.target, spec.gamma, spec.lambda, counter);
}

}  // namespace

ObservationBatch<double> sample_batch(ReplayBuffer& buffer, std::size_t n, const TargetSpec& spec,
                                      const TargetModels& models, PassCounter* counter) {
  spec.validate();
  if (n == 0) throw ShapeMismatch("batch size must be >= 1");
  if (buffer.size() < n) {
    throw InsufficientData("replay holds " + std::to_string(buffer.size()) + " transitions, batch needs " +
                           std::to_string(n));
  }
  const std::vector<std::size_t> idx = buffer.sample_indices(n);

  ObservationBatch<double> batch;
  batch.inputs.reserve(n);
  if (spec.is_state_value()) {
    const std::size_t lookahead =
        static_cast<std::size_t>(spec.kind == TargetKind::kKStepV ? spec.k : spec.gae_horizon);
    batch.targets.resize(static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<Transition> slice = buffer.slice(idx[i], lookahead);
      batch.targets(static_cast<Index>(i)) = state_value_target(slice, spec, models, counter);
      batch.inputs.push_back({slice.front().state, 0});
    }
  } else {
    std::vector<Transition> picked;
    picked.reserve(n);
    for (std::size_t i : idx) picked.push_back(buffer.at(i));
    batch.targets = q_targets(picked, spec, models, counter);
    for (const Transition& t : picked) batch.inputs.push_back({t.state, t.action});
  }
  fill_predictions(batch, models, counter);
  return batch;
}

ObservationBatch<double> make_batch(std::span<const Transition> transitions, const TargetSpec& spec,
                                    const TargetModels& models, PassCounter* counter) {
  spec.validate();
  if (transitions.empty()) throw ShapeMismatch("batch needs at least one transition");
  ObservationBatch<double> batch;
  if (spec.is_state_value()) {
    const std::size_t lookahead =
        static_cast<std::size_t>(spec.kind == TargetKind::kKStepV ? spec.k : spec.gae_horizon);
    batch.targets.resize(static_cast<Index>(transitions.size()));
    for (std::size_t i = 0; i < transitions.size(); ++i) {
      const auto rest = transitions.subspan(i, std::min(lookahead, transitions.size() - i));
      batch.targets(static_cast<Index>(i)) = state_value_target(rest, spec, models, counter);
      batch.inputs.push_back({transitions[i].state, 0});
    }
  } else {
    batch.targets = q_targets(transitions, spec, models, counter);
    for (const Transition& t : transitions) batch.inputs.push_back({t.state, t.action});
  }
  fill_predictions(batch, models, counter);
  return batch;
}

// ---------------------------------------------------------------------------
// Trajectory dumps
// ---------------------------------------------------------------------------

void write_transitions_jsonl(std::ostream& out, std::span<const Transition> transitions) {
  for (const Transition& t : transitions) {
    nlohmann::ordered_json j;
    j["s"] = std::vector<double>(t.state.data(), t.state.data() + t.state.size());
    j["a"] = t.action;
    j["r"] = t.reward;
    j["s_next"] = std::vector<double>(t.next_state.data(), t.next_state.data() + t.next_state.size());
    j["terminal"] = t.terminal;
    out << j.dump() << '\n';
  }
}

std::vector<Transition> read_transitions_jsonl(std::istream& in) {
  std::vector<Transition> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Transition t;
      const auto s = j.at("s").get<std::vector<double>>();
      const auto sn = j.at("s_next").get<std::vector<double>>();
      t.state = Eigen::Map<const VectorXd>(s.data(), static_cast<Index>(s.size()));
      t.next_state = Eigen::Map<const VectorXd>(sn.data(), static_cast<Index>(sn.size()));
      t.action = j.at("a").get<Index>();
      t.reward = j.at("r").get<double>();
      t.terminal = j.at("terminal").get<bool>();
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("transition record line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace kova
