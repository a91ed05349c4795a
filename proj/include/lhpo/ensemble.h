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

#ifndef LHPO_ENSEMBLE_H_
#define LHPO_ENSEMBLE_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lhpo/meta_dataset.h"
#include "lhpo/random.h"
#include "lhpo/surrogate.h"

namespace lhpo {

struct Ensemble {
  std::vector<SurrogateParams> members;
  std::vector<std::uint64_t> member_seeds;

  std::size_t size() const { return members.size(); }
  const Architecture& arch() const { return members.front().arch(); }
  // Throws InvariantError if empty or architectures differ.
  void Validate() const;

  bool operator==(const Ensemble&) const = default;
};

// Members initialized from seeds base_seed + i.
Ensemble InitEnsemble(int n_members, const Architecture& arch, std::uint64_t base_seed);

// Equal-weight mixture moments:
//   mean = avg(mu_i),  variance = avg(sigma_i^2 + mu_i^2) - mean^2,
// evaluated as avg(sigma_i^2) + avg((mu_i - mean)^2) with running means so
// identical members aggregate to themselves exactly. Floored at
// kVarianceFloor.
Prediction Aggregate(std::span<const Prediction> preds);

// One draw from N(mean, variance), clamped to the normalized-loss range.
double SampleResponse(const Prediction& agg, Rng& rng);

// Pooled encodings for a batch of histories that share a model.
struct HistoryBatch {
  std::vector<Eigen::MatrixXd> sums;  // one set_dim x B matrix per member
  std::vector<int> counts;            // history length per column

  int columns() const { return static_cast<int>(counts.size()); }
};

// A predictive model of task responses given a history. Implemented by the
// trained ensemble and by test doubles.
class ResponseModel {
 public:
  virtual ~ResponseModel() = default;

  virtual int grid_size() const = 0;
  // `copies` identical columns encoding `state`.
  virtual HistoryBatch Encode(const MdpState& state, int copies) const = 0;
  // Appends (actions[b], losses[b]) to column b.
  virtual void Extend(HistoryBatch& batch, std::span<const int> actions,
                      std::span<const double> losses) const = 0;
  // Aggregated prediction for actions[b] under column b.
  virtual std::vector<Prediction> Predict(const HistoryBatch& batch,
                                          std::span<const int> actions) const = 0;

  Prediction PredictOne(const MdpState& state, int action) const;
};

// ResponseModel view over an Ensemble. Holds references; both arguments
// must outlive the model.
class EnsembleModel final : public ResponseModel {
 public:
  EnsembleModel(const Ensemble& ensemble, const HyperparameterGrid& grid);

  int grid_size() const override { return grid_.size(); }
  HistoryBatch Encode(const MdpState& state, int copies) const override;
  void Extend(HistoryBatch& batch, std::span<const int> actions,
              std::span<const double> losses) const override;
  std::vector<Prediction> Predict(const HistoryBatch& batch,
                                  std::span<const int> actions) const override;

  // Per-member predictions for actions[b] under column b.
  std::vector<std::vector<Prediction>> PredictMembers(const HistoryBatch& batch,
                                                      std::span<const int> actions) const;

 private:
  const Ensemble& ensemble_;
  const HyperparameterGrid& grid_;
};

}  // namespace lhpo

#endif  // LHPO_ENSEMBLE_H_
