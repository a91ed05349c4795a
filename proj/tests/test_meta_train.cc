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
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "doctest.h"
#include "lhpo/errors.h"
#include "lhpo/meta_train.h"
#include "test_support.h"

using namespace lhpo;

namespace {

double ChiSquarePValue(const std::vector<long>& counts) {
  long total = 0;
  for (long c : counts) total += c;
  const double expected = static_cast<double>(total) / counts.size();
  double stat = 0.0;
  for (long c : counts) stat += (c - expected) * (c - expected) / expected;
  boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

double Norm(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

MetaTrainConfig QuickConfig(std::uint64_t seed) {
  MetaTrainConfig cfg;
  cfg.max_outer_iters = 40;
  cfg.eval_every = 10;
  cfg.patience = 100;
  cfg.valid_quadruples = 128;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_SUITE("meta_train") {

TEST_CASE("sample_quadruple contract") {
  MetaDataset md = testing::SmallDataset(1, 10, 30, 2);
  Rng rng(3);
  const std::string id = md.split.train.front();
  const auto& table = md.task(id).responses;
  for (int t = 1; t <= 29; ++t) {
    Quadruple q = SampleQuadruple(md, id, t, rng);
    CHECK(q.query.state.size() == static_cast<std::size_t>(t));
    CHECK(!q.query.state.Contains(q.query.action));
    CHECK(q.query.target == table[q.query.action]);
    for (const auto& obs : q.query.state.history) CHECK(obs.loss == table[obs.config_index]);
    CHECK_NOTHROW(CanonicalHistory(q.query.state, 30));
  }
  for (int rep = 0; rep < 20; ++rep) {
    Quadruple q = SampleQuadruple(md, id, 29, rng);
    int missing = -1;
    for (int i = 0; i < 30; ++i) {
      if (!q.query.state.Contains(i)) missing = i;
    }
    CHECK(q.query.action == missing);
  }
  CHECK_THROWS_AS(SampleQuadruple(md, id, 0, rng), ArgumentError);
  CHECK_THROWS_AS(SampleQuadruple(md, id, 30, rng), ArgumentError);
  CHECK_THROWS_AS(SampleQuadruple(md, "nope", 3, rng), IndexError);
}

TEST_CASE("sample_quadruple action is uniform") {
  MetaDataset md = testing::SmallDataset(2, 10, 20, 2);
  const std::string id = md.split.train.front();
  const int t = 5;
  Rng rng(99);
  std::vector<long> by_config(20, 0);
  std::vector<long> by_rank(20 - t, 0);
  for (int i = 0; i < 100000; ++i) {
    Quadruple q = SampleQuadruple(md, id, t, rng);
    ++by_config[q.query.action];
    int rank = 0;
    for (int c = 0; c < q.query.action; ++c) rank += q.query.state.Contains(c) ? 0 : 1;
    ++by_rank[rank];
  }
  CHECK(ChiSquarePValue(by_config) > 0.001);
  CHECK(ChiSquarePValue(by_rank) > 0.001);
}

TEST_CASE("outer step algebra") {
  auto grid = testing::RandomGrid(15, 2, 1);
  SurrogateParams theta = SurrogateParams::Initialize(testing::SmallArch(2), 3);

  SurrogateParams fixed = theta;
  for (int it = 0; it < 25; ++it) {
    ReptileOuterStep(fixed, 4, 1.0, [](int, SurrogateParams& local) {
      AdamState st;
      std::vector<double> zero(local.size(), 0.0);
      for (int s = 0; s < 5; ++s) AdamStep(st, local, zero, 1e-3);
    });
  }
  CHECK(fixed == theta);

  std::mt19937_64 rng(5);
  std::vector<LabeledQuery> batch;
  for (int b = 0; b < 6; ++b) {
    LabeledQuery q;
    q.state = testing::RandomState(15, 3, rng);
    q.action = 0;
    while (q.state.Contains(q.action)) ++q.action;
    q.target = 0.1 * b;
    batch.push_back(q);
  }
  const NllGradient g = ComputeNllGradient(theta, batch, grid);
  const double eta_in = 1e-2, eta_out = 0.7;
  SurrogateParams updated = theta;
  ReptileOuterStep(updated, 1, eta_out, [&](int, SurrogateParams& local) {
    NllGradient lg = ComputeNllGradient(local, batch, grid);
    for (std::size_t k = 0; k < local.size(); ++k) local.weights()[k] -= eta_in * lg.grad[k];
  });
  for (std::size_t k = 0; k < theta.size(); ++k) {
    CHECK(updated.weights()[k] ==
          doctest::Approx(theta.weights()[k] - eta_out * eta_in * g.grad[k]).epsilon(1e-12).scale(1e-12));
  }
  CHECK(BatchNll(updated, batch, grid) < g.loss);
}

TEST_CASE("outer step is a bounded convex move") {
  std::mt19937_64 rng(8);
  SurrogateParams theta = SurrogateParams::Initialize(testing::SmallArch(2), 1);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 1 + rep % 5;
    const double eta = 0.1 + 0.1 * (rep % 10);
    std::vector<SurrogateParams> adapted;
    std::normal_distribution<double> z(0.0, 0.3);
    SurrogateParams before = theta;
    ReptileOuterStep(theta, n, eta, [&](int, SurrogateParams& local) {
      for (auto& w : local.weights()) w += z(rng);
      adapted.push_back(local);
    });
    double max_dist = 0.0;
    for (const auto& a : adapted) max_dist = std::max(max_dist, Norm(a.weights(), before.weights()));
    CHECK(Norm(theta.weights(), before.weights()) <= eta * max_dist + 1e-12);
  }
}

TEST_CASE("evaluate_nll") {
  MetaDataset md = testing::SmallDataset(3, 10, 30, 2);
  md.split = MakeSplit([&] {
    std::vector<std::string> ids;
    for (const auto& t : md.tasks) ids.push_back(t.id);
    return ids;
  }(), 1, 2, 4);
  const auto& table = md.task(md.split.valid.front()).responses;
  testing::TableModel oracle(table, kVarianceFloor);
  Rng rng(1);
  EvalMetrics m = EvaluateNll(oracle, md, SplitKind::kValid, 200, rng);
  CHECK(m.mse == 0.0);

  Ensemble e = InitEnsemble(3, Architecture::Default(2), 5);
  Rng a(7), b(7);
  EvalMetrics x = EvaluateNll(e, md, SplitKind::kTest, 100, a);
  EvalMetrics y = EvaluateNll(e, md, SplitKind::kTest, 100, b);
  CHECK(x.nll == y.nll);
  CHECK(x.mse == y.mse);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Ensemble r = InitEnsemble(5, Architecture::Default(2), seed * 10);
    Rng s(seed);
    CHECK(EvaluateNll(r, md, SplitKind::kValid, 100, s).mse <= 1.0);
  }

  MetaDataset no_valid = md;
  no_valid.split.train.insert(no_valid.split.train.end(), md.split.valid.begin(), md.split.valid.end());
  no_valid.split.valid.clear();
  CHECK_THROWS_AS(EvaluateNll(e, no_valid, SplitKind::kValid, 10, rng), ContractError);
}

TEST_CASE("meta-training improves validation NLL") {
  SyntheticSpec spec;
  spec.n_tasks = 30;
  spec.grid_size = 100;
  spec.dim = 3;
  spec.seed = 12;
  MetaDataset md = GenerateSyntheticMetaDataset(spec);
  std::vector<std::string> ids;
  for (const auto& t : md.tasks) ids.push_back(t.id);
  md.split = MakeSplit(ids, 4, 6, 1);
  REQUIRE(md.split.train.size() == 20);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SurrogateParams init = SurrogateParams::Initialize(Architecture::Default(3), seed);
    MemberTrainResult r = MetaTrainMember(init, md, QuickConfig(seed), DeriveSeed(seed, "m"));
    CHECK(r.best_valid_nll < r.initial_valid_nll);
    CHECK(r.log.front().outer_iter == 0);
    CHECK(r.log.size() == 5);
  }
}

TEST_CASE("ensemble training is deterministic and independent of jobs") {
  MetaDataset md = testing::SmallDataset(4, 10, 30, 2);
  Ensemble init = InitEnsemble(3, Architecture::Default(2), 1);
  MetaTrainConfig cfg = QuickConfig(3);
  cfg.max_outer_iters = 10;
  cfg.eval_every = 5;
  cfg.minibatch_size = 16;
  MetaTrainResult a = ReptileMetaTrain(init, md, cfg, 1);
  MetaTrainResult b = ReptileMetaTrain(init, md, cfg, 3);
  CHECK(a.ensemble == b.ensemble);
  CHECK(!(a.ensemble == init));
  CHECK(!(a.ensemble.members[0] == a.ensemble.members[1]));

  auto dir = testing::TempDir("train_log");
  WriteTrainLogCsv(a.members[0].log, dir / "log.csv");
  std::ifstream in(dir / "log.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "outer_iter,train_nll,valid_nll,valid_mse,wall_ms");
}

TEST_CASE("early stopping keeps the best checkpoint") {
  MetaDataset md = testing::SmallDataset(5, 10, 30, 2);
  SurrogateParams init = SurrogateParams::Initialize(Architecture::Default(2), 2);
  MetaTrainConfig cfg = QuickConfig(1);
  cfg.max_outer_iters = 200;
  cfg.eval_every = 2;
  cfg.patience = 1;
  cfg.minibatch_size = 8;
  cfg.inner_lr = 0.05;
  MemberTrainResult r = MetaTrainMember(init, md, cfg, 11);
  CHECK(r.iterations_run < 200);
  double best = r.log.front().valid_nll;
  for (const auto& row : r.log) best = std::min(best, row.valid_nll);
  CHECK(r.best_valid_nll == best);
}

TEST_CASE("configuration and split errors") {
  MetaDataset md = testing::SmallDataset(6, 10, 30, 2);
  SurrogateParams init = SurrogateParams::Initialize(Architecture::Default(2), 2);
  MetaTrainConfig cfg = QuickConfig(1);
  cfg.t_min = 0;
  CHECK_THROWS_AS(MetaTrainMember(init, md, cfg, 1), ArgumentError);
  cfg = QuickConfig(1);
  cfg.t_min = 40;
  CHECK_THROWS_AS(MetaTrainMember(init, md, cfg, 1), ArgumentError);
  cfg = QuickConfig(1);
  cfg.inner_steps = 0;
  CHECK_THROWS_AS(MetaTrainMember(init, md, cfg, 1), ArgumentError);
  CHECK(QuickConfig(1).EffectiveTMax(30) == 29);

  MetaDataset empty = md;
  empty.split.test.insert(empty.split.test.end(), empty.split.train.begin(), empty.split.train.end());
  empty.split.train.clear();
  CHECK_THROWS_AS(MetaTrainMember(init, empty, QuickConfig(1), 1), ContractError);
}

}  // TEST_SUITE
