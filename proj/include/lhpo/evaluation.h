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

#ifndef LHPO_EVALUATION_H_
#define LHPO_EVALUATION_H_

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lhpo/hpo_loop.h"
#include "lhpo/meta_dataset.h"

namespace lhpo {

// (best - loss_min) / (loss_max - loss_min). Throws DegenerateTaskError if
// loss_max <= loss_min.
double NormalizedRegret(const TaskResponseTable& task, double best_observed);
// Same, with the best taken over a non-empty list of observed losses.
double NormalizedRegret(const TaskResponseTable& task, std::span<const double> observed);

// Fractional ranks (1 = lowest value); tied values share the mean of their
// positions.
std::vector<double> FractionalRanks(std::span<const double> values);
// Same over named methods. Requires at least two methods and finite values.
std::map<std::string, double> AverageRank(const std::map<std::string, double>& regrets);

struct Curve {
  std::string method;
  std::vector<int> trials;
  std::vector<double> mean;
  std::vector<double> sd;  // sample standard deviation across cells
};

// methods x trials
struct RankTable {
  std::vector<std::string> methods;
  std::vector<int> trials;
  std::vector<std::vector<double>> mean;
  std::vector<std::vector<double>> sd;
};

struct Report {
  std::vector<std::string> methods;  // sorted
  std::vector<int> checkpoints;
  std::vector<Curve> regret;         // one per method, trials 1..T
  std::vector<Curve> rank;           // one per method, trials 1..T
  RankTable rank_table;              // at the checkpoints
  RankTable regret_table;            // mean normalized regret at the checkpoints
  int cells = 0;                     // (task, seed) pairs
};

// Ranks methods within every (task, seed) cell at every trial and averages
// across cells. `task_ids` fixes the expected task set (empty: every task
// seen). Throws IncompleteDesignError listing missing (method, task, seed)
// cells or traces that are too short.
Report AggregateReport(std::span<const EpisodeTrace> traces, std::span<const std::string> task_ids,
                       std::span<const int> checkpoints);

// report/rank.csv, report/regret.csv (method, then mean and sd per
// checkpoint) and report/curves/{regret,rank}_<method>.csv (trial,mean,sd).
void WriteReport(const Report& report, const std::filesystem::path& dir);

}  // namespace lhpo

#endif  // LHPO_EVALUATION_H_
