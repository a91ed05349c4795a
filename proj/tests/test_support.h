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

#ifndef LHPO_TESTS_TEST_SUPPORT_H_
#define LHPO_TESTS_TEST_SUPPORT_H_

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "lhpo/ensemble.h"
#include "lhpo/hpo_loop.h"
#include "lhpo/meta_dataset.h"

namespace lhpo::testing {

// Predicts the true table value with a fixed variance. Sums are unused;
// only the per-column counts are tracked.
class TableModel final : public ResponseModel {
 public:
  TableModel(std::vector<double> table, double variance)
      : table_(std::move(table)), variance_(variance) {}

  int grid_size() const override { return static_cast<int>(table_.size()); }
  HistoryBatch Encode(const MdpState& state, int copies) const override {
    HistoryBatch b;
    b.counts.assign(copies, static_cast<int>(state.size()));
    return b;
  }
  void Extend(HistoryBatch& batch, std::span<const int>, std::span<const double>) const override {
    for (int& c : batch.counts) ++c;
  }
  std::vector<Prediction> Predict(const HistoryBatch&, std::span<const int> actions) const override {
    std::vector<Prediction> out;
    for (int a : actions) out.push_back({table_.at(a), variance_});
    return out;
  }

 private:
  std::vector<double> table_;
  double variance_;
};

// A learner that never adapts.
class FixedLearner final : public Learner {
 public:
  explicit FixedLearner(const ResponseModel& model) : model_(model) {}
  const ResponseModel& model() const override { return model_; }
  bool FineTune(const MdpState&, int, double, Rng&) override { return false; }

 private:
  const ResponseModel& model_;
};

inline HyperparameterGrid RandomGrid(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = u(rng);
  }
  return HyperparameterGrid(m);
}

inline MetaDataset SmallDataset(std::uint64_t seed, int tasks = 10, int grid = 40, int dim = 2) {
  SyntheticSpec spec;
  spec.n_tasks = tasks;
  spec.grid_size = grid;
  spec.dim = dim;
  spec.seed = seed;
  return GenerateSyntheticMetaDataset(spec);
}

inline Architecture SmallArch(int d) {
  Architecture a;
  a.config_dim = d;
  a.encoder_hidden = {8};
  a.set_dim = 4;
  a.head_hidden = {8};
  return a;
}

inline MdpState RandomState(int n, int t, std::mt19937_64& rng, const std::vector<double>* table = nullptr) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MdpState s;
  s.task_ref = "t";
  for (int i = 0; i < t; ++i) s.Append(idx[i], table ? (*table)[idx[i]] : u(rng));
  return s;
}

inline std::filesystem::path TempDir(const std::string& name) {
  const char* root = std::getenv("LHPO_TEST_TMP");
  std::filesystem::path dir = std::filesystem::path(root ? root : "/tmp/lhpo_tests") / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace lhpo::testing

#endif  // LHPO_TESTS_TEST_SUPPORT_H_
