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

#ifndef LHPO_PLANNER_H_
#define LHPO_PLANNER_H_

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "lhpo/ensemble.h"
#include "lhpo/random.h"
#include "lhpo/surrogate.h"

namespace lhpo {

struct PlannerConfig {
  int horizon = 3;
  int n_trajectories = 1000;
  int n_particles = 1;
  std::uint64_t seed = 0;

  // Throws ArgumentError unless every count is positive.
  void Validate() const;
};

struct SimulatedTrajectory {
  std::vector<int> actions;               // H' distinct unevaluated configs
  int particles = 0;
  std::vector<double> losses;             // particles x H', row-major
  std::vector<double> step_rewards;       // particle-averaged improvement per step
  std::vector<double> step_mean_losses;   // particle-averaged simulated loss per step
  double mean_final_best = 0.0;           // particle-averaged best-so-far after the last step

  int length() const { return static_cast<int>(actions.size()); }
  double loss(int particle, int step) const { return losses[particle * length() + step]; }
};

// max(0, min(history) - new_loss). Throws ContractError on an empty history.
double ImprovementReward(std::span<const double> history_losses, double new_loss);

// Random-shooting rollouts of the model from `state`. One seed is drawn from
// `rng`; trajectory k then uses its own stream derived from it and k, so the
// result does not depend on how columns are batched.
std::vector<SimulatedTrajectory> SimulateTrajectories(const ResponseModel& model,
                                                      const MdpState& state,
                                                      const PlannerConfig& cfg, Rng& rng);

// First action of the trajectory with the lowest mean final best-so-far.
int MpcSelect(std::span<const SimulatedTrajectory> trajs);

// Action with the lowest particle-averaged simulated loss at any step of any
// trajectory; ties go to the lowest config index.
int LookaheadSelect(std::span<const SimulatedTrajectory> trajs);

// One JSON object per trajectory and line, for inspection.
void DumpTrajectories(std::span<const SimulatedTrajectory> trajs, std::ostream& out);

}  // namespace lhpo

#endif  // LHPO_PLANNER_H_
