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

#include "lhpo/planner.h"

#include <algorithm>
#include <limits>
#include <map>

#include "json.hpp"
#include "lhpo/errors.h"

namespace lhpo {

void PlannerConfig::Validate() const {
  if (horizon < 1) throw ArgumentError("horizon must be >= 1");
  if (n_trajectories < 1) throw ArgumentError("n_trajectories must be >= 1");
  if (n_particles < 1) throw ArgumentError("n_particles must be >= 1");
}

double ImprovementReward(std::span<const double> history_losses, double new_loss) {
  if (history_losses.empty()) throw ContractError("improvement reward needs a non-empty history");
  const double best = *std::min_element(history_losses.begin(), history_losses.end());
  return std::max(0.0, best - new_loss);
}

std::vector<SimulatedTrajectory> SimulateTrajectories(const ResponseModel& model,
                                                      const MdpState& state,
                                                      const PlannerConfig& cfg, Rng& rng) {
  cfg.Validate();
  if (state.history.empty()) throw ContractError("planning needs at least one real observation");
  const int n = model.grid_size();
  const auto canonical = CanonicalHistory(state, n);

  std::vector<char> seen(n, 0);
  double real_best = std::numeric_limits<double>::infinity();
  for (const auto& obs : canonical) {
    seen[obs.config_index] = 1;
    real_best = std::min(real_best, obs.loss);
  }
  std::vector<int> remaining;
  for (int i = 0; i < n; ++i) {
    if (!seen[i]) remaining.push_back(i);
  }
  if (remaining.empty()) throw ContractError("no unevaluated configurations remain");

  const int h_len = std::min<int>(cfg.horizon, static_cast<int>(remaining.size()));
  const int k_count = cfg.n_trajectories;
  const int p_count = cfg.n_particles;
  const int columns = k_count * p_count;
  const std::uint64_t base = rng();

  std::vector<SimulatedTrajectory> trajs(k_count);
  std::vector<Rng> streams;
  streams.reserve(k_count);
  std::vector<int> pool;
  for (int k = 0; k < k_count; ++k) {
    streams.emplace_back(DeriveSeed(base, static_cast<std::uint64_t>(k)));
    pool = remaining;
    PartialShuffle(pool, static_cast<std::size_t>(h_len), streams[k]);
    SimulatedTrajectory& tr = trajs[k];
    tr.actions.assign(pool.begin(), pool.begin() + h_len);
    tr.particles = p_count;
    tr.losses.assign(static_cast<std::size_t>(p_count) * h_len, 0.0);
    tr.step_rewards.assign(h_len, 0.0);
    tr.step_mean_losses.assign(h_len, 0.0);
  }

  // Column k * P + p holds particle p of trajectory k.
  HistoryBatch batch = model.Encode(state, columns);
  std::vector<double> best(columns, real_best);
  std::vector<int> actions(columns);
  std::vector<double> sampled(columns);
  for (int h = 0; h < h_len; ++h) {
    for (int k = 0; k < k_count; ++k) {
      std::fill_n(actions.begin() + k * p_count, p_count, trajs[k].actions[h]);
    }
    const std::vector<Prediction> preds = model.Predict(batch, actions);
    for (int k = 0; k < k_count; ++k) {
      SimulatedTrajectory& tr = trajs[k];
      double reward_sum = 0.0;
      double loss_sum = 0.0;
      for (int p = 0; p < p_count; ++p) {
        const int c = k * p_count + p;
        const double y = SampleResponse(preds[c], streams[k]);
        sampled[c] = y;
        tr.losses[p * h_len + h] = y;
        reward_sum += std::max(0.0, best[c] - y);
        loss_sum += y;
        best[c] = std::min(best[c], y);
      }
      tr.step_rewards[h] = reward_sum / p_count;
      tr.step_mean_losses[h] = loss_sum / p_count;
    }
    if (h + 1 < h_len) model.Extend(batch, actions, sampled);
  }
  for (int k = 0; k < k_count; ++k) {
    double sum = 0.0;
    for (int p = 0; p < p_count; ++p) sum += best[k * p_count + p];
    trajs[k].mean_final_best = sum / p_count;
  }
  return trajs;
}

int MpcSelect(std::span<const SimulatedTrajectory> trajs) {
  if (trajs.empty()) throw ContractError("mpc selection needs at least one trajectory");
  std::size_t best = 0;
  for (std::size_t k = 1; k < trajs.size(); ++k) {
    if (trajs[k].mean_final_best < trajs[best].mean_final_best) best = k;
  }
  if (trajs[best].actions.empty()) throw ContractError("selected trajectory has no actions");
  return trajs[best].actions.front();
}

int LookaheadSelect(std::span<const SimulatedTrajectory> trajs) {
  if (trajs.empty()) throw ContractError("lookahead selection needs at least one trajectory");
  int best_action = -1;
  double best_score = std::numeric_limits<double>::infinity();
  for (const auto& tr : trajs) {
    for (int h = 0; h < tr.length(); ++h) {
      const double score = tr.step_mean_losses[h];
      const int a = tr.actions[h];
      if (best_action < 0 || score < best_score || (score == best_score && a < best_action)) {
        best_score = score;
        best_action = a;
      }
    }
  }
  if (best_action < 0) throw ContractError("trajectories contain no actions");
  return best_action;
}

void DumpTrajectories(std::span<const SimulatedTrajectory> trajs, std::ostream& out) {
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    const auto& tr = trajs[k];
    nlohmann::json j;
    j["index"] = k;
    j["actions"] = tr.actions;
    j["particles"] = tr.particles;
    j["losses"] = tr.losses;
    j["step_rewards"] = tr.step_rewards;
    j["step_mean_losses"] = tr.step_mean_losses;
    j["mean_final_best"] = tr.mean_final_best;
    out << j.dump() << '\n';
  }
}

}  // namespace lhpo
