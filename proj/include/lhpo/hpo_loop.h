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

#ifndef LHPO_HPO_LOOP_H_
#define LHPO_HPO_LOOP_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lhpo/ensemble.h"
#include "lhpo/meta_dataset.h"
#include "lhpo/planner.h"
#include "lhpo/random.h"

namespace lhpo {

enum class Policy { kLookaheadMpc, kMpc, kGreedy, kRandom };

// "lookahead_mpc", "mpc", "greedy", "random".
std::string_view PolicyName(Policy policy);
Policy ParsePolicy(std::string_view name);

struct EpisodeConfig {
  int n_trials = 50;
  int n_init = 3;
  PlannerConfig planner;
  int fine_tune_steps = 10;
  double fine_tune_lr = 1e-3;
  Policy policy = Policy::kLookaheadMpc;
  std::uint64_t seed = 0;

  void Validate(int grid_size) const;
};

// Initial evaluations are numbered 1 - n_init .. 0, planned trials 1 .. T.
struct TrialRecord {
  int trial = 0;
  int config_index = 0;
  double loss = 0.0;
  double best_so_far = 0.0;
  double regret = 0.0;
  double wall_ms = 0.0;

  // Timing is not part of a trial's identity.
  bool operator==(const TrialRecord& o) const {
    return trial == o.trial && config_index == o.config_index && loss == o.loss &&
           best_so_far == o.best_so_far && regret == o.regret;
  }
};

struct EpisodeTrace {
  std::string task_id;
  std::string method;  // label used for reporting, defaults to the policy name
  Policy policy = Policy::kRandom;
  std::uint64_t seed = 0;
  int n_init = 0;
  std::vector<TrialRecord> trials;

  // Best-so-far normalized regret after planned trial `trial` (0 = after init).
  double RegretAt(int trial) const;
};

// The surrogate an episode plans with and adapts as it observes the task.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual const ResponseModel& model() const = 0;
  // Returns false (and leaves the model unchanged) if nothing could be fit.
  virtual bool FineTune(const MdpState& state, int steps, double lr, Rng& rng) = 0;
};

struct FineTuneResult {
  bool applied = false;
  std::string warning;
};

// `steps` Adam steps per member on leave-one-out quadruples built from the
// history (up to 32 per step, drawn without replacement). Each call starts a
// fresh optimizer state.
FineTuneResult FineTune(Ensemble& ensemble, const MdpState& state, const HyperparameterGrid& grid,
                        int steps, double lr, Rng& rng);

// Learner over a private copy of an ensemble.
class EnsembleLearner final : public Learner {
 public:
  EnsembleLearner(const Ensemble& ensemble, const HyperparameterGrid& grid);
  EnsembleLearner(const EnsembleLearner&) = delete;
  EnsembleLearner& operator=(const EnsembleLearner&) = delete;

  const ResponseModel& model() const override { return model_; }
  bool FineTune(const MdpState& state, int steps, double lr, Rng& rng) override;

  const Ensemble& ensemble() const { return ensemble_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  Ensemble ensemble_;
  HyperparameterGrid grid_;
  EnsembleModel model_;
  std::vector<std::string> warnings_;
};

// Unevaluated config indices in ascending order.
std::vector<int> UnevaluatedConfigs(const MdpState& state, int grid_size);

// random: uniform over unevaluated; greedy: lowest predicted mean, lowest
// index on ties.
int BaselineSelect(Policy policy, const ResponseModel& model, const MdpState& state, Rng& rng);

EpisodeTrace RunEpisode(Learner& learner, const TaskResponseTable& task, const HyperparameterGrid& grid,
                        const EpisodeConfig& cfg);
// Runs on a private copy; `ensemble` is never modified.
EpisodeTrace RunEpisode(const Ensemble& ensemble, const TaskResponseTable& task,
                        const HyperparameterGrid& grid, const EpisodeConfig& cfg);

// CSV columns: task_id,policy,seed,trial,config_index,loss,best_so_far,regret,ms
// The policy column carries the method label. Without `timing` the ms column
// is written as 0 so that files are reproducible byte for byte.
void WriteTraceCsv(std::span<const EpisodeTrace> traces, std::ostream& out, bool timing = false);
void WriteTraceCsv(std::span<const EpisodeTrace> traces, const std::filesystem::path& path,
                   bool timing = false);
std::vector<EpisodeTrace> ReadTraceCsv(const std::filesystem::path& path);

}  // namespace lhpo

#endif  // LHPO_HPO_LOOP_H_
