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

#ifndef LHPO_TESTS_TRAJECTORY_FIXTURES_H_
#define LHPO_TESTS_TRAJECTORY_FIXTURES_H_

#include <algorithm>
#include <vector>

#include "lhpo/planner.h"

namespace lhpo::testing {

// Builds a trajectory from per-particle losses (rows = particles), deriving
// the summary fields directly from their definitions.
inline SimulatedTrajectory MakeTrajectory(std::vector<int> actions,
                                          const std::vector<std::vector<double>>& particle_losses,
                                          double real_best) {
  SimulatedTrajectory tr;
  tr.actions = std::move(actions);
  tr.particles = static_cast<int>(particle_losses.size());
  const int h = tr.length();
  tr.step_rewards.assign(h, 0.0);
  tr.step_mean_losses.assign(h, 0.0);
  double final_sum = 0.0;
  for (const auto& row : particle_losses) {
    double best = real_best;
    for (int s = 0; s < h; ++s) {
      tr.losses.push_back(row[s]);
      tr.step_rewards[s] += std::max(0.0, best - row[s]) / tr.particles;
      tr.step_mean_losses[s] += row[s] / tr.particles;
      best = std::min(best, row[s]);
    }
    final_sum += best;
  }
  tr.mean_final_best = final_sum / tr.particles;
  return tr;
}

// Two particles. Trajectory A (actions 10..12) has the best final
// best-so-far, while the lowest particle-averaged step loss is the third
// action of trajectory C (32).
inline std::vector<SimulatedTrajectory> ParticleSpreadCase() {
  return {
      MakeTrajectory({10, 11, 12}, {{0.2, 0.9, 0.9}, {0.9, 0.2, 0.9}}, 1.0),
      MakeTrajectory({20, 21, 22}, {{0.7, 0.7, 0.7}, {0.7, 0.7, 0.7}}, 1.0),
      MakeTrajectory({30, 31, 32}, {{0.6, 0.6, 0.4}, {0.6, 0.6, 0.4}}, 1.0),
  };
}

// One particle. The best trajectory reaches its best loss at its third step.
inline std::vector<SimulatedTrajectory> StepCurveCase() {
  return {
      MakeTrajectory({5, 6, 7}, {{0.6, 0.5, 0.4}}, 0.9),
      MakeTrajectory({1, 2, 3}, {{0.5, 0.3, 0.1}}, 0.9),
      MakeTrajectory({8, 9, 4}, {{0.7, 0.8, 0.6}}, 0.9),
  };
}

}  // namespace lhpo::testing

#endif  // LHPO_TESTS_TRAJECTORY_FIXTURES_H_
