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

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "lhpo/errors.h"
#include "lhpo/planner.h"
#include "test_support.h"
#include "trajectory_fixtures.h"

using namespace lhpo;

namespace {

std::vector<double> RandomTable(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> t(n);
  for (auto& x : t) x = u(rng);
  return t;
}

double BestOf(const MdpState& s) {
  double b = 1e300;
  for (const auto& o : s.history) b = std::min(b, o.loss);
  return b;
}

}  // namespace

TEST_SUITE("planner") {

TEST_CASE("improvement reward arithmetic") {
  const std::vector<double> h1{0.5, 0.3};
  CHECK(ImprovementReward(h1, 0.2) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(ImprovementReward(h1, 0.4) == 0.0);
  const std::vector<double> h2{0.3};
  CHECK(ImprovementReward(h2, 0.3) == 0.0);
  CHECK_THROWS_AS(ImprovementReward(std::vector<double>{}, 0.1), ContractError);
}

TEST_CASE("true rewards telescope") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> seen{u(rng)};
    const double first = seen[0];
    double total = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double y = u(rng);
      total += ImprovementReward(seen, y);
      seen.push_back(y);
    }
    const double final_best = *std::min_element(seen.begin(), seen.end());
    CHECK(total == doctest::Approx(std::max(0.0, first - final_best)).epsilon(1e-12));
  }
}

TEST_CASE("shapes and horizon clamp") {
  std::mt19937_64 rng(2);
  const auto table = RandomTable(10, rng);
  testing::TableModel model(table, 0.01);
  MdpState s = testing::RandomState(10, 8, rng, &table);
  PlannerConfig cfg;
  cfg.horizon = 5;
  cfg.n_trajectories = 7;
  cfg.n_particles = 3;
  Rng r(4);
  auto trajs = SimulateTrajectories(model, s, cfg, r);
  CHECK(trajs.size() == 7);
  for (const auto& tr : trajs) {
    CHECK(tr.length() == 2);
    CHECK(tr.losses.size() == 3 * 2);
    CHECK(tr.particles == 3);
  }
  cfg.horizon = 3;
  MdpState s2 = testing::RandomState(10, 2, rng, &table);
  for (const auto& tr : SimulateTrajectories(model, s2, cfg, r)) CHECK(tr.losses.size() == 9);
}

TEST_CASE("deterministic oracle rollouts reproduce the table") {
  std::mt19937_64 rng(3);
  const auto table = RandomTable(30, rng);
  testing::TableModel model(table, 0.0);
  MdpState s = testing::RandomState(30, 4, rng, &table);
  PlannerConfig cfg;
  cfg.horizon = 4;
  cfg.n_trajectories = 50;
  cfg.n_particles = 1;
  Rng r(9);
  for (const auto& tr : SimulateTrajectories(model, s, cfg, r)) {
    double best = BestOf(s);
    std::vector<double> hist;
    for (const auto& o : s.history) hist.push_back(o.loss);
    for (int h = 0; h < tr.length(); ++h) {
      CHECK(tr.loss(0, h) == table[tr.actions[h]]);
      CHECK(tr.step_rewards[h] == ImprovementReward(hist, table[tr.actions[h]]));
      hist.push_back(table[tr.actions[h]]);
      best = std::min(best, table[tr.actions[h]]);
    }
    CHECK(tr.mean_final_best == best);
  }
}

TEST_CASE("trajectory invariants") {
  auto grid = testing::RandomGrid(40, 3, 5);
  Ensemble e = InitEnsemble(3, Architecture::Default(3), 5);
  EnsembleModel model(e, grid);
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    MdpState s = testing::RandomState(40, 3 + rep, rng);
    PlannerConfig cfg;
    cfg.horizon = 1 + rep % 5;
    cfg.n_trajectories = 20;
    cfg.n_particles = 1 + rep % 3;
    Rng r(rep);
    auto trajs = SimulateTrajectories(model, s, cfg, r);
    for (const auto& tr : trajs) {
      std::set<int> distinct(tr.actions.begin(), tr.actions.end());
      CHECK(distinct.size() == tr.actions.size());
      for (int a : tr.actions) CHECK(!s.Contains(a));
      for (double x : tr.losses) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
      }
      for (double x : tr.step_rewards) CHECK(x >= 0.0);
      CHECK(tr.mean_final_best <= BestOf(s));
    }
    CHECK(!s.Contains(MpcSelect(trajs)));
    CHECK(!s.Contains(LookaheadSelect(trajs)));
  }
}

TEST_CASE("seed determinism and batching independence") {
  auto grid = testing::RandomGrid(30, 2, 7);
  Ensemble e = InitEnsemble(2, Architecture::Default(2), 8);
  EnsembleModel model(e, grid);
  std::mt19937_64 rng(7);
  MdpState s = testing::RandomState(30, 5, rng);
  PlannerConfig cfg;
  cfg.n_trajectories = 40;
  cfg.n_particles = 2;
  Rng a(1), b(1);
  auto x = SimulateTrajectories(model, s, cfg, a);
  auto y = SimulateTrajectories(model, s, cfg, b);
  for (std::size_t k = 0; k < x.size(); ++k) {
    CHECK(x[k].actions == y[k].actions);
    CHECK(x[k].losses == y[k].losses);
  }
  CHECK(MpcSelect(x) == MpcSelect(y));
  CHECK(LookaheadSelect(x) == LookaheadSelect(y));

  // Trajectory k depends only on the drawn base seed and k.
  cfg.n_trajectories = 10;
  Rng c(1);
  auto z = SimulateTrajectories(model, s, cfg, c);
  for (std::size_t k = 0; k < z.size(); ++k) {
    CHECK(z[k].actions == x[k].actions);
    for (std::size_t i = 0; i < z[k].losses.size(); ++i) {
      CHECK(z[k].losses[i] == doctest::Approx(x[k].losses[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("selection rules") {
  auto one = std::vector<SimulatedTrajectory>{testing::MakeTrajectory({4, 2}, {{0.5, 0.1}}, 0.9)};
  CHECK(MpcSelect(one) == 4);
  CHECK(LookaheadSelect(one) == 2);

  auto two = std::vector<SimulatedTrajectory>{testing::MakeTrajectory({7}, {{0.4}}, 0.9),
                                              testing::MakeTrajectory({3}, {{0.2}}, 0.9)};
  CHECK(MpcSelect(two) == 3);

  auto tie = std::vector<SimulatedTrajectory>{testing::MakeTrajectory({9, 1}, {{0.2, 0.5}}, 0.9),
                                              testing::MakeTrajectory({5, 6}, {{0.2, 0.5}}, 0.9)};
  CHECK(MpcSelect(tie) == 9);
  CHECK(LookaheadSelect(tie) == 5);

  // A repeated action keeps its best score.
  auto rep = std::vector<SimulatedTrajectory>{testing::MakeTrajectory({8, 2}, {{0.6, 0.3}}, 0.9),
                                              testing::MakeTrajectory({2, 8}, {{0.7, 0.25}}, 0.9)};
  CHECK(LookaheadSelect(rep) == 8);

  CHECK_THROWS_AS(MpcSelect(std::vector<SimulatedTrajectory>{}), ContractError);
  CHECK_THROWS_AS(LookaheadSelect(std::vector<SimulatedTrajectory>{}), ContractError);
}

TEST_CASE("mpc and lookahead disagree on crafted trajectory sets") {
  auto within = testing::StepCurveCase();
  CHECK(MpcSelect(within) == 1);
  CHECK(LookaheadSelect(within) == 3);
  auto across = testing::ParticleSpreadCase();
  CHECK(across[0].mean_final_best < across[2].mean_final_best);
  CHECK(MpcSelect(across) == 10);
  CHECK(LookaheadSelect(across) == 32);
}

TEST_CASE("single-step lookahead is an argmin over candidates") {
  std::mt19937_64 rng(10);
  const auto table = RandomTable(50, rng);
  testing::TableModel model(table, 0.0);
  for (int rep = 0; rep < 20; ++rep) {
    MdpState s = testing::RandomState(50, 5, rng, &table);
    PlannerConfig cfg;
    cfg.horizon = 1;
    cfg.n_trajectories = 6;
    Rng r(rep);
    auto trajs = SimulateTrajectories(model, s, cfg, r);
    int best = -1;
    for (const auto& tr : trajs) {
      const int a = tr.actions[0];
      if (best < 0 || table[a] < table[best] || (table[a] == table[best] && a < best)) best = a;
    }
    CHECK(LookaheadSelect(trajs) == best);
  }
}

TEST_CASE("covering lookahead finds the global remaining argmin") {
  std::mt19937_64 rng(11);
  const auto table = RandomTable(25, rng);
  testing::TableModel model(table, 0.0);
  for (int rep = 0; rep < 10; ++rep) {
    MdpState s = testing::RandomState(25, 4, rng, &table);
    PlannerConfig cfg;
    cfg.horizon = 3;
    cfg.n_trajectories = 500;
    Rng r(rep);
    auto trajs = SimulateTrajectories(model, s, cfg, r);
    std::set<int> covered;
    for (const auto& tr : trajs) covered.insert(tr.actions.begin(), tr.actions.end());
    REQUIRE(covered.size() == 21);
    int best = -1;
    for (int a = 0; a < 25; ++a) {
      if (!s.Contains(a) && (best < 0 || table[a] < table[best])) best = a;
    }
    CHECK(LookaheadSelect(trajs) == best);
  }
}

TEST_CASE("planner errors") {
  testing::TableModel model({0.1, 0.2, 0.3}, 0.0);
  MdpState empty;
  PlannerConfig cfg;
  Rng r(1);
  CHECK_THROWS_AS(SimulateTrajectories(model, empty, cfg, r), ContractError);
  MdpState full;
  for (int i = 0; i < 3; ++i) full.Append(i, 0.1 * i);
  CHECK_THROWS_AS(SimulateTrajectories(model, full, cfg, r), ContractError);
  cfg.n_particles = 0;
  MdpState one;
  one.Append(0, 0.1);
  CHECK_THROWS_AS(SimulateTrajectories(model, one, cfg, r), ArgumentError);
}

TEST_CASE("trajectory dump is one json object per line") {
  std::ostringstream out;
  DumpTrajectories(testing::ParticleSpreadCase(), out);
  const std::string text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(text.find("\"mean_final_best\"") != std::string::npos);
}

}  // TEST_SUITE
