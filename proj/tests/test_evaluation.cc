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

#include <cmath>
#include <fstream>
#include <random>

#include "doctest.h"
#include "lhpo/errors.h"
#include "lhpo/evaluation.h"
#include "test_support.h"

using namespace lhpo;

namespace {

// A trace whose best-so-far regret after planned trial t is curve[t].
EpisodeTrace SyntheticTrace(const std::string& method, const std::string& task, std::uint64_t seed,
                            const std::vector<double>& curve) {
  EpisodeTrace tr;
  tr.method = method;
  tr.task_id = task;
  tr.seed = seed;
  tr.n_init = 1;
  for (std::size_t t = 0; t < curve.size(); ++t) {
    TrialRecord r;
    r.trial = static_cast<int>(t);
    r.config_index = static_cast<int>(t);
    r.loss = curve[t];
    r.best_so_far = curve[t];
    r.regret = curve[t];
    tr.trials.push_back(r);
  }
  return tr;
}

std::vector<double> DecreasingCurve(int T, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> c(T + 1);
  double v = u(rng);
  for (auto& x : c) {
    if (u(rng) < 0.3) v *= u(rng);
    x = v;
  }
  return c;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("normalized regret arithmetic") {
  auto task = TaskResponseTable::FromResponses("x", {0.1, 0.9, 0.5, 0.3});
  const std::vector<double> seen{0.5, 0.3};
  CHECK(NormalizedRegret(task, seen) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(NormalizedRegret(task, std::vector<double>{0.1, 0.5}) == 0.0);
  CHECK(NormalizedRegret(task, std::vector<double>{0.9}) == 1.0);
  auto flat = TaskResponseTable::FromResponses("f", {0.4, 0.4});
  CHECK_THROWS_AS(NormalizedRegret(flat, 0.4), DegenerateTaskError);
  CHECK_THROWS_AS(NormalizedRegret(task, std::vector<double>{}), ContractError);
  auto norm = NormalizeTask(task);
  CHECK(NormalizedRegret(norm, 0.375) == 0.375);
}

TEST_CASE("average rank examples") {
  auto r1 = AverageRank({{"A", 0.1}, {"B", 0.3}});
  CHECK(r1.at("A") == 1.0);
  CHECK(r1.at("B") == 2.0);
  auto r2 = AverageRank({{"A", 0.2}, {"B", 0.2}});
  CHECK(r2.at("A") == 1.5);
  CHECK(r2.at("B") == 1.5);
  auto r3 = AverageRank({{"A", 0.1}, {"B", 0.1}, {"C", 0.5}});
  CHECK(r3.at("A") == 1.5);
  CHECK(r3.at("B") == 1.5);
  CHECK(r3.at("C") == 3.0);
  CHECK_THROWS_AS(AverageRank({{"A", 0.1}}), ContractError);
  CHECK_THROWS_AS(AverageRank({{"A", 0.1}, {"B", std::nan("")}}), ContractError);
}

TEST_CASE("rank sums are conserved and invariant under monotone maps") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> m_dist(2, 9), level(0, 4);
  for (int cell = 0; cell < 1000; ++cell) {
    const int m = m_dist(rng);
    std::vector<double> v(m);
    for (auto& x : v) x = level(rng) / 4.0;
    const auto r = FractionalRanks(v);
    double sum = 0.0;
    for (double x : r) sum += x;
    CHECK(sum == m * (m + 1) / 2.0);
    std::vector<double> mapped(m);
    for (int i = 0; i < m; ++i) mapped[i] = std::exp(3.0 * v[i]) + 0.5 * v[i];
    CHECK(FractionalRanks(mapped) == r);
  }
}

TEST_CASE("dominant method ranks first everywhere") {
  std::mt19937_64 rng(2);
  std::vector<EpisodeTrace> traces;
  for (int t = 0; t < 3; ++t) {
    for (std::uint64_t s = 0; s < 2; ++s) {
      auto curve = DecreasingCurve(20, rng);
      auto worse = curve;
      for (auto& x : worse) x = x + 0.1;
      traces.push_back(SyntheticTrace("a", "task" + std::to_string(t), s, curve));
      traces.push_back(SyntheticTrace("b", "task" + std::to_string(t), s, worse));
    }
  }
  const std::vector<int> cps{5, 10, 20};
  Report rep = AggregateReport(traces, {}, cps);
  CHECK(rep.methods == std::vector<std::string>{"a", "b"});
  CHECK(rep.cells == 6);
  for (int t = 0; t < 20; ++t) {
    CHECK(rep.rank[0].mean[t] == 1.0);
    CHECK(rep.rank[1].mean[t] == 2.0);
    CHECK(rep.rank[0].sd[t] == 0.0);
  }
  CHECK(rep.rank_table.trials == cps);
}

TEST_CASE("report aggregates cells") {
  std::mt19937_64 rng(5);
  std::vector<EpisodeTrace> traces;
  const std::vector<std::string> methods{"m1", "m2", "m3", "m4"};
  for (const auto& m : methods) {
    for (int t = 0; t < 4; ++t) {
      for (std::uint64_t s = 0; s < 3; ++s) {
        traces.push_back(SyntheticTrace(m, "t" + std::to_string(t), s, DecreasingCurve(50, rng)));
      }
    }
  }
  const std::vector<int> cps{15, 33, 50};
  Report rep = AggregateReport(traces, {}, cps);
  for (int t = 0; t < 50; ++t) {
    double sum = 0.0;
    for (std::size_t m = 0; m < methods.size(); ++m) sum += rep.rank[m].mean[t];
    CHECK(sum == doctest::Approx(10.0).epsilon(1e-12));
  }
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (int t = 1; t < 50; ++t) CHECK(rep.regret[m].mean[t] <= rep.regret[m].mean[t - 1] + 1e-15);
    // Cross-check one checkpoint against a direct computation.
    std::vector<double> cells;
    for (const auto& tr : traces) {
      if (tr.method == methods[m]) cells.push_back(tr.RegretAt(33));
    }
    double mean = 0.0;
    for (double x : cells) mean += x;
    mean /= cells.size();
    double ss = 0.0;
    for (double x : cells) ss += (x - mean) * (x - mean);
    CHECK(rep.regret_table.mean[m][1] == doctest::Approx(mean).epsilon(1e-12));
    CHECK(rep.regret_table.sd[m][1] == doctest::Approx(std::sqrt(ss / (cells.size() - 1))).epsilon(1e-12));
  }

  auto dir = testing::TempDir("report");
  WriteReport(rep, dir);
  std::ifstream in(dir / "rank.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "method,t15_mean,t15_sd,t33_mean,t33_sd,t50_mean,t50_sd");
  std::ifstream curve(dir / "curves" / "regret_m1.csv");
  std::getline(curve, header);
  CHECK(header == "trial,mean,sd");
}

TEST_CASE("incomplete designs are reported") {
  std::mt19937_64 rng(1);
  std::vector<EpisodeTrace> traces;
  traces.push_back(SyntheticTrace("a", "t0", 0, DecreasingCurve(10, rng)));
  traces.push_back(SyntheticTrace("a", "t0", 1, DecreasingCurve(10, rng)));
  traces.push_back(SyntheticTrace("b", "t0", 0, DecreasingCurve(10, rng)));
  const std::vector<int> cps{5};
  try {
    AggregateReport(traces, {}, cps);
    FAIL("expected an incomplete-design error");
  } catch (const IncompleteDesignError& e) {
    CHECK(std::string(e.what()).find("b / t0 / seed 1") != std::string::npos);
  }
  const std::vector<std::string> tasks{"t0", "t1"};
  traces.push_back(SyntheticTrace("b", "t0", 1, DecreasingCurve(10, rng)));
  CHECK_NOTHROW(AggregateReport(traces, {}, cps));
  CHECK_THROWS_AS(AggregateReport(traces, tasks, cps), IncompleteDesignError);
  const std::vector<int> too_far{11};
  CHECK_THROWS_AS(AggregateReport(traces, {}, too_far), IncompleteDesignError);

  std::vector<EpisodeTrace> single{SyntheticTrace("a", "t0", 0, DecreasingCurve(10, rng))};
  CHECK_THROWS_AS(AggregateReport(single, {}, cps), ContractError);
}

}  // TEST_SUITE
