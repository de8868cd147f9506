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

// Parameterized value functions h(u; θ) with exact reverse-mode Jacobians.
//
// A model is an immutable stack of dense layers over one flat parameter
// vector. The flat layout is layer-major; inside a layer the weight matrix
// (out x in, row-major) comes first, then the bias vector (if any). Hidden
// layers apply the model's nonlinearity, the last layer is affine and produces
// one value per output head. For Q-functions each head is an action; a
// ModelInput's action index picks the head that plays the role of h(u; θ).

#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace kova {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Activation { kIdentity, kRelu, kTanh };

struct ModelInput {
  VectorXd features;
  Index action = 0;
};

struct LayerLayout {
  Index inputs = 0;
  Index outputs = 0;
  Index weight_offset = 0;
  Index bias_offset = -1;  // -1 when the layer has no bias
  bool has_bias() const { return bias_offset >= 0; }
  Index end() const { return has_bias() ? bias_offset + outputs : weight_offset + inputs * outputs; }
};

/// Where a flat parameter index lives.
struct ParameterLocation {
  Index layer = 0;
  bool is_bias = false;
  Index row = 0;  // output unit
  Index col = 0;  // input unit (0 for biases)
  friend bool operator==(const ParameterLocation&, const ParameterLocation&) = default;
};

class ValueModel {
 public:
  /// features -> heads, no hidden layer. Bias optional (off by default).
  static ValueModel linear(Index inputs, Index heads = 1, bool bias = false);
  /// widths = {inputs, hidden..., heads}; every layer has a bias.
  static ValueModel mlp(std::vector<Index> widths, Activation hidden_activation);

  Index parameter_count() const { return parameter_count_; }
  Index input_width() const { return layers_.front().inputs; }
  Index head_count() const { return layers_.back().outputs; }
  Activation hidden_activation() const { return activation_; }
  std::span<const LayerLayout> layers() const { return layers_; }
  bool is_linear() const { return layers_.size() == 1; }

  ParameterLocation locate(Index flat_index) const;
  Index flat_index(const ParameterLocation& loc) const;

  /// All heads for a batch of feature columns (input_width x N) -> heads x N.
  MatrixXd forward(const VectorXd& theta, const MatrixXd& features) const;

 private:
  ValueModel() = default;
  void finalize_layout(const std::vector<Index>& widths, bool bias);

  std::vector<LayerLayout> layers_;
  Index parameter_count_ = 0;
  Activation activation_ = Activation::kIdentity;
};

/// Stack inputs column-wise, checking feature width and action range.
MatrixXd stack_features(const ValueModel& model, std::span<const ModelInput> inputs);

/// h(u_i; θ) for each input, selecting the input's action head.
VectorXd evaluate(const ValueModel& model, const VectorXd& theta, std::span<const ModelInput> inputs);

/// d x N matrix whose column i is ∇θ h(u_i; θ).
MatrixXd jacobian(const ValueModel& model, const VectorXd& theta, std::span<const ModelInput> inputs);

/// evaluate and jacobian from a single forward/backward sweep.
std::pair<VectorXd, MatrixXd> evaluate_with_jacobian(const ValueModel& model, const VectorXd& theta,
                                                     std::span<const ModelInput> inputs);

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer, biases 0.
VectorXd init_parameters(const ValueModel& model, std::uint64_t seed);

}  // namespace kova
