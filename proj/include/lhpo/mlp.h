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

#ifndef LHPO_MLP_H_
#define LHPO_MLP_H_

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lhpo/random.h"

namespace lhpo {

// Weight and gradient storage. Eigen picks its vectorized summation path
// from the buffer address, so a fixed base alignment keeps results bitwise
// reproducible across allocations.
using AlignedBuffer = std::vector<double, Eigen::aligned_allocator<double>>;

// Layout of a ReLU feed-forward stack inside a flat weight buffer. Layer l
// stores a column-major dims[l+1] x dims[l] weight matrix followed by its
// bias. The last layer is linear.
class MlpLayout {
 public:
  MlpLayout() = default;
  MlpLayout(std::vector<int> dims, std::size_t offset);

  int num_layers() const { return static_cast<int>(dims_.size()) - 1; }
  int in_dim() const { return dims_.front(); }
  int out_dim() const { return dims_.back(); }
  const std::vector<int>& dims() const { return dims_; }

  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const {
    return offsets_[layer] + static_cast<std::size_t>(dims_[layer + 1]) * dims_[layer];
  }
  std::size_t begin() const { return offsets_.front(); }
  std::size_t end() const { return end_; }
  std::size_t param_count() const { return end_ - offsets_.front(); }

 private:
  std::vector<int> dims_;
  std::vector<std::size_t> offsets_;
  std::size_t end_ = 0;
};

// Layer inputs recorded during a forward pass; inputs[l] feeds layer l.
struct MlpTape {
  std::vector<Eigen::MatrixXd> inputs;
};

// Applies the stack to each column of `input`.
void MlpForward(const MlpLayout& layout, std::span<const double> weights,
                const Eigen::MatrixXd& input, Eigen::MatrixXd& output,
                MlpTape* tape = nullptr);

// Accumulates d(loss)/d(weights) into `grad` (same layout as `weights`)
// given d(loss)/d(output). Writes d(loss)/d(input) when `d_input` is set.
void MlpBackward(const MlpLayout& layout, std::span<const double> weights,
                 const MlpTape& tape, const Eigen::MatrixXd& d_output,
                 std::span<double> grad, Eigen::MatrixXd* d_input = nullptr);

// He-uniform initialization (bound sqrt(6 / fan_in)); biases are zero.
void MlpInitialize(const MlpLayout& layout, std::span<double> weights, Rng& rng);

}  // namespace lhpo

#endif  // LHPO_MLP_H_
