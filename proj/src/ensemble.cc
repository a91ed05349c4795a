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

#include "lhpo/ensemble.h"

#include <algorithm>
#include <cmath>

#include "lhpo/errors.h"

namespace lhpo {

void Ensemble::Validate() const {
  if (members.empty()) throw InvariantError("ensemble has no members");
  if (member_seeds.size() != members.size()) {
    throw InvariantError("ensemble seed count does not match member count");
  }
  for (const auto& m : members) {
    if (!(m.arch() == members.front().arch())) {
      throw InvariantError("ensemble members have different architectures");
    }
  }
}

Ensemble InitEnsemble(int n_members, const Architecture& arch, std::uint64_t base_seed) {
  if (n_members < 1) throw ArgumentError("an ensemble needs at least one member");
  Ensemble ensemble;
  for (int i = 0; i < n_members; ++i) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
    ensemble.members.push_back(SurrogateParams::Initialize(arch, seed));
    ensemble.member_seeds.push_back(seed);
  }
  return ensemble;
}

Prediction Aggregate(std::span<const Prediction> preds) {
  if (preds.empty()) throw ContractError("cannot aggregate an empty prediction list");
  double mean = 0.0;
  double mean_var = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!(preds[i].variance > 0.0)) throw ContractError("member variance must be positive");
    const double k = static_cast<double>(i + 1);
    mean += (preds[i].mean - mean) / k;
    mean_var += (preds[i].variance - mean_var) / k;
  }
  double spread = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double dev = preds[i].mean - mean;
    spread += (dev * dev - spread) / static_cast<double>(i + 1);
  }
  return {mean, std::max(mean_var + spread, kVarianceFloor)};
}

double SampleResponse(const Prediction& agg, Rng& rng) {
  const double draw = agg.mean + std::sqrt(agg.variance) * StandardNormal(rng);
  return std::clamp(draw, 0.0, 1.0);
}

Prediction ResponseModel::PredictOne(const MdpState& state, int action) const {
  HistoryBatch batch = Encode(state, 1);
  const int actions[] = {action};
  return Predict(batch, actions).front();
}

EnsembleModel::EnsembleModel(const Ensemble& ensemble, const HyperparameterGrid& grid)
    : ensemble_(ensemble), grid_(grid) {
  ensemble_.Validate();
  if (ensemble_.arch().config_dim != grid_.dim()) {
    throw ShapeError("ensemble expects config dim " + std::to_string(ensemble_.arch().config_dim) +
                     ", grid has " + std::to_string(grid_.dim()));
  }
}

HistoryBatch EnsembleModel::Encode(const MdpState& state, int copies) const {
  HistoryBatch batch;
  const int count = static_cast<int>(CanonicalHistory(state, grid_.size()).size());
  batch.counts.assign(copies, count);
  for (const auto& member : ensemble_.members) {
    batch.sums.push_back(EncodeHistorySum(member, state, grid_).replicate(1, copies));
  }
  return batch;
}

void EnsembleModel::Extend(HistoryBatch& batch, std::span<const int> actions,
                           std::span<const double> losses) const {
  const int columns = batch.columns();
  if (static_cast<int>(actions.size()) != columns || static_cast<int>(losses.size()) != columns) {
    throw ShapeError("extend expects one (action, loss) per batch column");
  }
  const int d = grid_.dim();
  Eigen::MatrixXd inputs(d + 1, columns);
  for (int b = 0; b < columns; ++b) {
    if (actions[b] < 0 || actions[b] >= grid_.size()) throw IndexError("extend action out of range");
    inputs.col(b).head(d) = grid_.config(actions[b]);
    inputs(d, b) = losses[b];
  }
  for (std::size_t m = 0; m < ensemble_.size(); ++m) {
    const SurrogateParams& member = ensemble_.members[m];
    Eigen::MatrixXd encoded;
    MlpForward(member.encoder(), member.weights(), inputs, encoded);
    batch.sums[m] += encoded;
  }
  for (int& c : batch.counts) ++c;
}

std::vector<std::vector<Prediction>> EnsembleModel::PredictMembers(
    const HistoryBatch& batch, std::span<const int> actions) const {
  const int columns = batch.columns();
  if (static_cast<int>(actions.size()) != columns) {
    throw ShapeError("predict expects one action per batch column");
  }
  std::vector<std::vector<Prediction>> out;
  out.reserve(ensemble_.size());
  for (std::size_t m = 0; m < ensemble_.size(); ++m) {
    Eigen::MatrixXd pooled = batch.sums[m];
    for (int b = 0; b < columns; ++b) {
      if (batch.counts[b] > 0) pooled.col(b) /= static_cast<double>(batch.counts[b]);
    }
    out.push_back(PredictFromEncoding(ensemble_.members[m], grid_, actions, pooled));
  }
  return out;
}

std::vector<Prediction> EnsembleModel::Predict(const HistoryBatch& batch,
                                               std::span<const int> actions) const {
  auto per_member = PredictMembers(batch, actions);
  std::vector<Prediction> out(actions.size());
  std::vector<Prediction> column(ensemble_.size());
  for (std::size_t b = 0; b < actions.size(); ++b) {
    for (std::size_t m = 0; m < ensemble_.size(); ++m) column[m] = per_member[m][b];
    out[b] = Aggregate(column);
  }
  return out;
}

}  // namespace lhpo
