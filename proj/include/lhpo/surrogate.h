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

#ifndef LHPO_SURROGATE_H_
#define LHPO_SURROGATE_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lhpo/meta_dataset.h"
#include "lhpo/mlp.h"

namespace lhpo {

inline constexpr double kVarianceFloor = 1e-6;

// Widths of the set encoder g: R^(d+1) -> R^(set_dim) and the head
// f: R^(d+set_dim) -> R^2. Hidden layers use ReLU, outputs are linear.
struct Architecture {
  int config_dim = 1;
  std::vector<int> encoder_hidden{64, 64};
  int set_dim = 64;
  std::vector<int> head_hidden{64, 64};

  static Architecture Default(int config_dim) {
    Architecture arch;
    arch.config_dim = config_dim;
    return arch;
  }

  bool operator==(const Architecture&) const = default;
};

// Weights of one probabilistic deep-set network, stored as a single flat
// buffer: encoder layers first, then head layers.
class SurrogateParams {
 public:
  SurrogateParams() = default;
  // Zero-initialized weights.
  explicit SurrogateParams(Architecture arch);
  // He-uniform weights drawn from a stream seeded by `seed`.
  static SurrogateParams Initialize(const Architecture& arch, std::uint64_t seed);

  const Architecture& arch() const { return arch_; }
  const MlpLayout& encoder() const { return encoder_; }
  const MlpLayout& head() const { return head_; }

  std::span<double> weights() { return weights_; }
  std::span<const double> weights() const { return weights_; }
  std::size_t size() const { return weights_.size(); }

  bool operator==(const SurrogateParams& other) const {
    return arch_ == other.arch_ && weights_ == other.weights_;
  }

 private:
  Architecture arch_;
  MlpLayout encoder_;
  MlpLayout head_;
  AlignedBuffer weights_;
};

struct Prediction {
  double mean = 0.0;
  double variance = 1.0;

  bool operator==(const Prediction&) const = default;
};

struct Observation {
  int config_index = 0;
  double loss = 0.0;

  bool operator==(const Observation&) const = default;
};

// The set of evaluated configurations and their losses on one task.
struct MdpState {
  std::string task_ref;
  std::vector<Observation> history;

  bool Contains(int config_index) const;
  // Throws ContractError on a repeated configuration or non-finite loss.
  void Append(int config_index, double loss);
  std::size_t size() const { return history.size(); }
};

// History sorted by config index after validating indices against a grid
// of `grid_size` rows. Every consumer pools in this order, which makes
// results bitwise independent of insertion order.
std::vector<Observation> CanonicalHistory(const MdpState& state, int grid_size);

// Sum of g([config, loss]) over the history in canonical order.
Eigen::VectorXd EncodeHistorySum(const SurrogateParams& params, const MdpState& state,
                                 const HyperparameterGrid& grid);

// Mean of g([config, loss]) over the history; zero vector when empty.
Eigen::VectorXd EncodeHistory(const SurrogateParams& params, const MdpState& state,
                              const HyperparameterGrid& grid);

// Mean / variance for the loss of `action` given the history.
Prediction Predict(const SurrogateParams& params, const MdpState& state, int action,
                   const HyperparameterGrid& grid);

// Batched head evaluation: column b of `pooled` is the encoded history used
// for `actions[b]`.
std::vector<Prediction> PredictFromEncoding(const SurrogateParams& params,
                                            const HyperparameterGrid& grid,
                                            std::span<const int> actions,
                                            const Eigen::MatrixXd& pooled);

// softplus(raw) + kVarianceFloor.
double VarianceFromRaw(double raw);

// 0.5 * log(variance) + (target - mean)^2 / (2 * variance).
double GaussianNll(const Prediction& pred, double target);

struct LabeledQuery {
  MdpState state;
  int action = 0;
  double target = 0.0;
};

struct NllGradient {
  double loss = 0.0;          // mean NLL over the batch
  AlignedBuffer grad;         // congruent with SurrogateParams::weights()
};

// Exact gradient of the mean batch NLL with respect to every weight.
NllGradient ComputeNllGradient(const SurrogateParams& params,
                               std::span<const LabeledQuery> batch,
                               const HyperparameterGrid& grid);

// Mean batch NLL without the backward pass.
double BatchNll(const SurrogateParams& params, std::span<const LabeledQuery> batch,
                const HyperparameterGrid& grid);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;

  static AdamState For(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

void AdamStep(AdamState& state, std::span<double> params, std::span<const double> grad,
              double lr, const AdamHyper& hyper = {});
inline void AdamStep(AdamState& state, SurrogateParams& params, std::span<const double> grad,
                     double lr) {
  AdamStep(state, params.weights(), grad, lr);
}

}  // namespace lhpo

#endif  // LHPO_SURROGATE_H_
