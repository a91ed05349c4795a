// Copyright 2026 The LHPO Authors
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

#include "lhpo/mlp.h"

#include <cmath>

#include "lhpo/errors.h"

namespace lhpo {
namespace {

using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;

}  // namespace

MlpLayout::MlpLayout(std::vector<int> dims, std::size_t offset) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw ArgumentError("an MLP needs at least one layer");
  for (int d : dims_) {
    if (d < 1) throw ArgumentError("MLP layer widths must be positive");
  }
  std::size_t cursor = offset;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(cursor);
    cursor += static_cast<std::size_t>(dims_[l + 1]) * (dims_[l] + 1);
  }
  end_ = cursor;
}

void MlpForward(const MlpLayout& layout, std::span<const double> weights,
                const Eigen::MatrixXd& input, Eigen::MatrixXd& output, MlpTape* tape) {
  if (input.rows() != layout.in_dim()) {
    throw ShapeError("MLP input has " + std::to_string(input.rows()) + " rows, expected " +
                     std::to_string(layout.in_dim()));
  }
  const auto& dims = layout.dims();
  if (tape) tape->inputs.resize(layout.num_layers());
  Eigen::MatrixXd current = input;
  for (int l = 0; l < layout.num_layers(); ++l) {
    ConstMatrixMap w(weights.data() + layout.weight_offset(l), dims[l + 1], dims[l]);
    ConstVectorMap b(weights.data() + layout.bias_offset(l), dims[l + 1]);
    Eigen::MatrixXd next = w * current;
    next.colwise() += b;
    if (l + 1 < layout.num_layers()) next = next.cwiseMax(0.0);
    if (tape) {
      tape->inputs[l] = std::move(current);
    }
    current = std::move(next);
  }
  output = std::move(current);
}

void MlpBackward(const MlpLayout& layout, std::span<const double> weights,
                 const MlpTape& tape, const Eigen::MatrixXd& d_output,
                 std::span<double> grad, Eigen::MatrixXd* d_input) {
  const auto& dims = layout.dims();
  Eigen::MatrixXd delta = d_output;
  for (int l = layout.num_layers() - 1; l >= 0; --l) {
    const Eigen::MatrixXd& a = tape.inputs[l];
    ConstMatrixMap w(weights.data() + layout.weight_offset(l), dims[l + 1], dims[l]);
    MatrixMap dw(grad.data() + layout.weight_offset(l), dims[l + 1], dims[l]);
    VectorMap db(grad.data() + layout.bias_offset(l), dims[l + 1]);
    dw.noalias() += delta * a.transpose();
    db += delta.rowwise().sum();
    if (l == 0 && d_input == nullptr) break;
    Eigen::MatrixXd d_a = w.transpose() * delta;
    if (l == 0) {
      *d_input = std::move(d_a);
      break;
    }
    // ReLU mask: the stored input is the previous layer's activation.
    delta = (a.array() > 0.0).select(d_a.array(), 0.0).matrix();
  }
}

void MlpInitialize(const MlpLayout& layout, std::span<double> weights, Rng& rng) {
  const auto& dims = layout.dims();
  for (int l = 0; l < layout.num_layers(); ++l) {
    const double bound = std::sqrt(6.0 / dims[l]);
    const std::size_t n = static_cast<std::size_t>(dims[l + 1]) * dims[l];
    for (std::size_t k = 0; k < n; ++k) {
      weights[layout.weight_offset(l) + k] = UniformReal(rng, -bound, bound);
    }
    for (int k = 0; k < dims[l + 1]; ++k) weights[layout.bias_offset(l) + k] = 0.0;
  }
}

}  // namespace lhpo
