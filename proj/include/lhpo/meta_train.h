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

#ifndef LHPO_META_TRAIN_H_
#define LHPO_META_TRAIN_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lhpo/ensemble.h"
#include "lhpo/meta_dataset.h"
#include "lhpo/random.h"
#include "lhpo/surrogate.h"

namespace lhpo {

// A random-policy transition sample: t observed configurations of one task,
// an unobserved action, and the task's true loss for it.
struct Quadruple {
  std::string task_id;
  LabeledQuery query;
};

// Draws t distinct configurations uniformly, then the action uniformly from
// the remaining N - t. Requires 1 <= t <= N - 1.
Quadruple SampleQuadruple(const MetaDataset& md, std::string_view task_id, int t, Rng& rng);

enum class InnerOptimizer { kAdam, kSgd };

struct MetaTrainConfig {
  int task_batch_size = 8;
  int minibatch_size = 64;
  int inner_steps = 5;
  double inner_lr = 1e-3;
  double outer_lr = 1.0;
  int t_min = 1;
  int t_max = 50;  // clamped to N - 1
  int max_outer_iters = 10000;
  int eval_every = 50;
  int patience = 20;
  int valid_quadruples = 256;
  InnerOptimizer inner_optimizer = InnerOptimizer::kAdam;
  std::uint64_t seed = 0;

  int EffectiveTMax(int grid_size) const;
  // Throws ArgumentError describing the first invalid field.
  void Validate(int grid_size) const;
};

struct EvalMetrics {
  double nll = 0.0;
  double mse = 0.0;
};

// Mean NLL and squared error of the aggregated prediction on `n` fresh
// quadruples from `split` (tasks uniform, t uniform in [t_min, t_max]).
EvalMetrics EvaluateNll(const ResponseModel& model, const MetaDataset& md, SplitKind split, int n,
                        Rng& rng, int t_min = 1, int t_max = 50);
EvalMetrics EvaluateNll(const Ensemble& ensemble, const MetaDataset& md, SplitKind split, int n,
                        Rng& rng, int t_min = 1, int t_max = 50);

// Adapts a private copy of the parameters for task slot `slot`.
using InnerAdaptation = std::function<void(int slot, SurrogateParams& task_params)>;

// theta <- theta + outer_lr * mean_i(theta_i - theta), with theta_i the result
// of `adapt` applied to a copy of theta for each of the n task slots.
void ReptileOuterStep(SurrogateParams& params, int n_tasks, double outer_lr,
                      const InnerAdaptation& adapt);

struct TrainLogRow {
  int outer_iter = 0;
  double train_nll = 0.0;
  double valid_nll = 0.0;
  double valid_mse = 0.0;
  double wall_ms = 0.0;
};

struct MemberTrainResult {
  SurrogateParams params;  // best-validation checkpoint
  std::vector<TrainLogRow> log;
  double initial_valid_nll = 0.0;
  double best_valid_nll = 0.0;
  int best_iter = 0;
  int iterations_run = 0;
};

struct MetaTrainResult {
  Ensemble ensemble;
  std::vector<MemberTrainResult> members;
};

// First-order meta-training of one network from `init`. `stream_seed` drives
// every sampling decision, so the run is deterministic.
MemberTrainResult MetaTrainMember(const SurrogateParams& init, const MetaDataset& md,
                                  const MetaTrainConfig& cfg, std::uint64_t stream_seed);

// Trains every member independently (up to `jobs` at once) on streams
// derived from cfg.seed and the member index.
MetaTrainResult ReptileMetaTrain(const Ensemble& ensemble, const MetaDataset& md,
                                 const MetaTrainConfig& cfg, int jobs = 1);

// Columns: outer_iter,train_nll,valid_nll,valid_mse,wall_ms
void WriteTrainLogCsv(std::span<const TrainLogRow> rows, const std::filesystem::path& path);

}  // namespace lhpo

#endif  // LHPO_META_TRAIN_H_
