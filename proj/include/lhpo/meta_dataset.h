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

#ifndef LHPO_META_DATASET_H_
#define LHPO_META_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace lhpo {

// The discrete search space: N encoded configurations of dimension d.
// Construction validates N >= 2, finite features and distinct rows.
class HyperparameterGrid {
 public:
  HyperparameterGrid() = default;
  // `configs` is N x d, one configuration per row.
  explicit HyperparameterGrid(Eigen::MatrixXd configs);

  int size() const { return static_cast<int>(configs_.rows()); }
  int dim() const { return static_cast<int>(configs_.cols()); }

  const Eigen::MatrixXd& configs() const { return configs_; }
  // d x N view with one configuration per column.
  const Eigen::MatrixXd& columns() const { return columns_; }
  auto config(int index) const { return columns_.col(index); }

  bool operator==(const HyperparameterGrid& other) const {
    return configs_.rows() == other.configs_.rows() &&
           configs_.cols() == other.configs_.cols() &&
           configs_ == other.configs_;
  }

 private:
  Eigen::MatrixXd configs_;
  Eigen::MatrixXd columns_;
};

// One black-box task: a loss per grid configuration.
struct TaskResponseTable {
  std::string id;
  std::vector<double> responses;
  double loss_min = 0.0;
  double loss_max = 0.0;

  // Computes loss_min / loss_max; rejects empty or non-finite responses.
  static TaskResponseTable FromResponses(std::string id,
                                         std::vector<double> responses);

  bool operator==(const TaskResponseTable&) const = default;
};

// Min-max normalization to [0, 1]. Throws DegenerateTaskError when the
// response surface is constant.
TaskResponseTable NormalizeTask(const TaskResponseTable& task);

struct TaskSplit {
  std::vector<std::string> train;
  std::vector<std::string> valid;
  std::vector<std::string> test;

  bool operator==(const TaskSplit&) const = default;
};

enum class SplitKind { kTrain, kValid, kTest };

struct MetaDataset {
  HyperparameterGrid grid;
  std::vector<TaskResponseTable> tasks;
  TaskSplit split;

  const TaskResponseTable& task(std::string_view id) const;
  const std::vector<std::string>& split_ids(SplitKind kind) const;

  // Throws InvariantError naming the offending task or id.
  void Validate() const;

  bool operator==(const MetaDataset&) const = default;
};

enum class SyntheticFamily { kQuadraticBowl, kMixtureOfGaussians, kRastriginLike };

SyntheticFamily ParseFamily(std::string_view name);
std::string_view FamilyName(SyntheticFamily family);

struct SyntheticSpec {
  int n_tasks = 30;
  int grid_size = 200;
  int dim = 3;
  SyntheticFamily family = SyntheticFamily::kQuadraticBowl;
  double noise_sd = 0.02;
  std::uint64_t seed = 0;
};

// Related tasks drawn around a shared family prototype. Scalar features are
// uniform in [0, 1]; responses are normalized per task; the split is 70/10/20
// of a seeded shuffle of the task ids.
MetaDataset GenerateSyntheticMetaDataset(const SyntheticSpec& spec);

// Seeded re-split of `ids` into train / valid / test of the given sizes
// (train receives the remainder). Each list is returned sorted.
TaskSplit MakeSplit(std::vector<std::string> ids, int n_valid, int n_test,
                    std::uint64_t seed);

// Canonical JSON: sorted keys, shortest round-trip float formatting.
std::string SerializeMetaDataset(const MetaDataset& md);
MetaDataset ParseMetaDataset(std::string_view json_text);

MetaDataset ReadMetaDataset(const std::filesystem::path& path);
void WriteMetaDataset(const MetaDataset& md, const std::filesystem::path& path);

}  // namespace lhpo

#endif  // LHPO_META_DATASET_H_
