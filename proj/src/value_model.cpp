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

#include "kova/value_model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "kova/errors.hpp"

namespace kova {
namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

RowMajorMap weights_of(const LayerLayout& layer, const VectorXd& theta) {
  return RowMajorMap(theta.data() + layer.weight_offset, layer.outputs, layer.inputs);
}

void apply_activation(Activation act, MatrixXd& z) {
  switch (act) {
    case Activation::kIdentity:
      break;
    case Activation::kRelu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::kTanh:
      z = z.array().tanh().matrix();
      break;
  }
}

// Derivative expressed through the pre-activation z and activation a = f(z).
// ReLU'(0) is taken as 0.
void multiply_activation_derivative(Activation act, const MatrixXd& z, const MatrixXd& a, MatrixXd& g) {
  switch (act) {
    case Activation::kIdentity:
      break;
    case Activation::kRelu:
      g = (z.array() > 0.0).select(g, 0.0);
      break;
    case Activation::kTanh:
      g = (g.array() * (1.0 - a.array().square())).matrix();
      break;
  }
}

struct ForwardTrace {
  std::vector<MatrixXd> pre;   // z_l, one per layer
  std::vector<MatrixXd> post;  // a_l; post[0] is the input itself
};

ForwardTrace forward_trace(const ValueModel& model, const VectorXd& theta, const MatrixXd& x) {
  ForwardTrace tr;
  const auto layers = model.layers();
  tr.pre.reserve(layers.size());
  tr.post.reserve(layers.size() + 1);
  tr.post.push_back(x);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerLayout& layer = layers[l];
    MatrixXd z = weights_of(layer, theta) * tr.post.back();
    if (layer.has_bias()) z.colwise() += theta.segment(layer.bias_offset, layer.outputs);
    MatrixXd a = z;
    if (l + 1 < layers.size()) apply_activation(model.hidden_activation(), a);
    tr.pre.push_back(std::move(z));
    tr.post.push_back(std::move(a));
  }
  return tr;
}

void check_theta(const ValueModel& model, const VectorXd& theta) {
  if (theta.size() != model.parameter_count()) {
    throw ShapeMismatch("parameter vector has " + std::to_string(theta.size()) + " entries, model expects " +
                        std::to_string(model.parameter_count()));
  }
}

}  // namespace

ValueModel ValueModel::linear(Index inputs, Index heads, bool bias) {
  if (inputs < 1 || heads < 1) throw ShapeMismatch("linear model needs inputs >= 1 and heads >= 1");
  ValueModel m;
  m.activation_ = Activation::kIdentity;
  m.finalize_layout({inputs, heads}, bias);
  return m;
}

ValueModel ValueModel::mlp(std::vector<Index> widths, Activation hidden_activation) {
  if (widths.size() < 2) throw ShapeMismatch("mlp needs at least input and output widths");
  for (Index w : widths) {
    if (w < 1) throw ShapeMismatch("mlp layer widths must be >= 1");
  }
  ValueModel m;
  m.activation_ = hidden_activation;
  m.finalize_layout(widths, true);
  return m;
}

void ValueModel::finalize_layout(const std::vector<Index>& widths, bool bias) {
  Index offset = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    LayerLayout layer;
    layer.inputs = widths[l];
    layer.outputs = widths[l + 1];
    layer.weight_offset = offset;
    offset += layer.inputs * layer.outputs;
    if (bias) {
      layer.bias_offset = offset;
      offset += layer.outputs;
    }
    layers_.push_back(layer);
  }
  parameter_count_ = offset;
}

ParameterLocation ValueModel::locate(Index flat_index) const {
  if (flat_index < 0 || flat_index >= parameter_count_) {
    throw IndexOutOfRange("parameter index " + std::to_string(flat_index) + " out of range");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerLayout& layer = layers_[l];
    if (flat_index >= layer.end()) continue;
    const Index local = flat_index - layer.weight_offset;
    if (local < layer.inputs * layer.outputs) {
      return {static_cast<Index>(l), false, local / layer.inputs, local % layer.inputs};
    }
    return {static_cast<Index>(l), true, flat_index - layer.bias_offset, 0};
  }
  throw IndexOutOfRange("parameter index not covered by layout");
}

Index ValueModel::flat_index(const ParameterLocation& loc) const {
  if (loc.layer < 0 || loc.layer >= static_cast<Index>(layers_.size())) {
    throw IndexOutOfRange("layer index out of range");
  }
  const LayerLayout& layer = layers_[static_cast<std::size_t>(loc.layer)];
  if (loc.row < 0 || loc.row >= layer.outputs) throw IndexOutOfRange("row out of range");
  if (loc.is_bias) {
    if (!layer.has_bias() || loc.col != 0) throw IndexOutOfRange("layer has no such bias");
    return layer.bias_offset + loc.row;
  }
  if (loc.col < 0 || loc.col >= layer.inputs) throw IndexOutOfRange("col out of range");
  return layer.weight_offset + loc.row * layer.inputs + loc.col;
}

MatrixXd ValueModel::forward(const VectorXd& theta, const MatrixXd& features) const {
  check_theta(*this, theta);
  if (features.rows() != input_width()) {
    throw ShapeMismatch("feature rows " + std::to_string(features.rows()) + " != model input width " +
                        std::to_string(input_width()));
  }
  MatrixXd a = features;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerLayout& layer = layers_[l];
    MatrixXd z = weights_of(layer, theta) * a;
    if (layer.has_bias()) z.colwise() += theta.segment(layer.bias_offset, layer.outputs);
    if (l + 1 < layers_.size()) apply_activation(activation_, z);
    a = std::move(z);
  }
  return a;
}

MatrixXd stack_features(const ValueModel& model, std::span<const ModelInput> inputs) {
  if (inputs.empty()) throw ShapeMismatch("at least one model input is required");
  MatrixXd x(model.input_width(), static_cast<Index>(inputs.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const ModelInput& in = inputs[i];
    if (in.features.size() != model.input_width()) {
      throw ShapeMismatch("input " + std::to_string(i) + " has " + std::to_string(in.features.size()) +
                          " features, model expects " + std::to_string(model.input_width()));
    }
    if (in.action < 0 || in.action >= model.head_count()) {
      throw ShapeMismatch("input " + std::to_string(i) + " action " + std::to_string(in.action) +
                          " outside [0, " + std::to_string(model.head_count()) + ")");
    }
    x.col(static_cast<Index>(i)) = in.features;
  }
  return x;
}

VectorXd evaluate(const ValueModel& model, const VectorXd& theta, std::span<const ModelInput> inputs) {
  const MatrixXd out = model.forward(theta, stack_features(model, inputs));
  VectorXd h(out.cols());
  for (Index i = 0; i < out.cols(); ++i) h(i) = out(inputs[static_cast<std::size_t>(i)].action, i);
  return h;
}

std::pair<VectorXd, MatrixXd> evaluate_with_jacobian(const ValueModel& model, const VectorXd& theta,
                                                     std::span<const ModelInput> inputs) {
  check_theta(model, theta);
  const MatrixXd x = stack_features(model, inputs);
  const Index n = x.cols();
  const ForwardTrace tr = forward_trace(model, theta, x);
  const auto layers = model.layers();

  VectorXd h(n);
  MatrixXd g = MatrixXd::Zero(model.head_count(), n);  // dh/da_L per column
  for (Index i = 0; i < n; ++i) {
    const Index a = inputs[static_cast<std::size_t>(i)].action;
    h(i) = tr.post.back()(a, i);
    g(a, i) = 1.0;
  }

  MatrixXd jac = MatrixXd::Zero(model.parameter_count(), n);
  for (std::size_t l = layers.size(); l-- > 0;) {
    const LayerLayout& layer = layers[l];
    const MatrixXd& below = tr.post[l];
    // g holds dh/dz_l here (the last layer is affine).
    for (Index i = 0; i < n; ++i) {
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> wgrad(
          jac.col(i).data() + layer.weight_offset, layer.outputs, layer.inputs);
      wgrad.noalias() = g.col(i) * below.col(i).transpose();
      if (layer.has_bias()) jac.col(i).segment(layer.bias_offset, layer.outputs) = g.col(i);
    }
    if (l == 0) break;
    MatrixXd up = weights_of(layer, theta).transpose() * g;
    multiply_activation_derivative(model.hidden_activation(), tr.pre[l - 1], tr.post[l], up);
    g = std::move(up);
  }
  return {std::move(h), std::move(jac)};
}

MatrixXd jacobian(const ValueModel& model, const VectorXd& theta, std::span<const ModelInput> inputs) {
  return evaluate_with_jacobian(model, theta, inputs).second;
}

VectorXd init_parameters(const ValueModel& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VectorXd theta = VectorXd::Zero(model.parameter_count());
  for (const LayerLayout& layer : model.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.inputs));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index k = 0; k < layer.inputs * layer.outputs; ++k) theta(layer.weight_offset + k) = dist(rng);
  }
  return theta;
}

}  // namespace kova
