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

#include "lhpo/hpo_loop.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "lhpo/errors.h"
#include "lhpo/evaluation.h"

namespace lhpo {
namespace {

constexpr int kFineTuneBatch = 32;

std::string FormatDouble(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

template <typename T>
T ParseNumber(std::string_view field, const std::string& what) {
  T value{};
  auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError("bad " + what + " field '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

std::string_view PolicyName(Policy policy) {
  switch (policy) {
    case Policy::kLookaheadMpc: return "lookahead_mpc";
    case Policy::kMpc: return "mpc";
    case Policy::kGreedy: return "greedy";
    case Policy::kRandom: return "random";
  }
  return "unknown";
}

Policy ParsePolicy(std::string_view name) {
  for (Policy p : {Policy::kLookaheadMpc, Policy::kMpc, Policy::kGreedy, Policy::kRandom}) {
    if (PolicyName(p) == name) return p;
  }
  throw ArgumentError("unknown policy '" + std::string(name) +
                      "' (expected lookahead_mpc, mpc, greedy or random)");
}

void EpisodeConfig::Validate(int grid_size) const {
  if (n_init < 1) throw ArgumentError("n_init must be >= 1");
  if (n_trials < 0) throw ArgumentError("n_trials must be >= 0");
  if (n_init + n_trials > grid_size) {
    throw ArgumentError("budget n_init + n_trials = " + std::to_string(n_init + n_trials) +
                        " exceeds the grid size " + std::to_string(grid_size));
  }
  if (fine_tune_steps < 0) throw ArgumentError("fine_tune_steps must be >= 0");
  if (fine_tune_steps > 0 && !(fine_tune_lr > 0.0)) throw ArgumentError("fine_tune_lr must be positive");
  planner.Validate();
}

double EpisodeTrace::RegretAt(int trial) const {
  const int row = n_init - 1 + trial;
  if (row < 0 || row >= static_cast<int>(trials.size())) {
    throw IndexError("trial " + std::to_string(trial) + " outside the trace of " + task_id);
  }
  return trials[row].regret;
}

FineTuneResult FineTune(Ensemble& ensemble, const MdpState& state, const HyperparameterGrid& grid,
                        int steps, double lr, Rng& rng) {
  if (state.history.empty()) throw ContractError("fine-tuning needs a non-empty history");
  if (steps <= 0) return {};
  const int t = static_cast<int>(state.history.size());
  if (t < 2) return {false, "history of size 1 has no leave-one-out quadruple; fine-tuning skipped"};

  std::vector<LabeledQuery> loo(t);
  for (int j = 0; j < t; ++j) {
    LabeledQuery& q = loo[j];
    q.state.task_ref = state.task_ref;
    for (int i = 0; i < t; ++i) {
      if (i != j) q.state.history.push_back(state.history[i]);
    }
    q.action = state.history[j].config_index;
    q.target = state.history[j].loss;
  }
  const int batch_size = std::min(t, kFineTuneBatch);
  std::vector<int> order(t);
  std::vector<LabeledQuery> batch(batch_size);
  for (auto& member : ensemble.members) {
    AdamState adam;
    for (int s = 0; s < steps; ++s) {
      std::iota(order.begin(), order.end(), 0);
      PartialShuffle(order, static_cast<std::size_t>(batch_size), rng);
      for (int b = 0; b < batch_size; ++b) batch[b] = loo[order[b]];
      NllGradient g = ComputeNllGradient(member, batch, grid);
      if (!std::isfinite(g.loss)) throw NonFiniteError("non-finite loss while fine-tuning");
      AdamStep(adam, member, g.grad, lr);
    }
  }
  return {true, ""};
}

EnsembleLearner::EnsembleLearner(const Ensemble& ensemble, const HyperparameterGrid& grid)
    : ensemble_(ensemble), grid_(grid), model_(ensemble_, grid_) {}

bool EnsembleLearner::FineTune(const MdpState& state, int steps, double lr, Rng& rng) {
  FineTuneResult r = ::lhpo::FineTune(ensemble_, state, grid_, steps, lr, rng);
  if (!r.warning.empty()) warnings_.push_back(r.warning);
  return r.applied;
}

std::vector<int> UnevaluatedConfigs(const MdpState& state, int grid_size) {
  std::vector<char> seen(grid_size, 0);
  for (const auto& obs : CanonicalHistory(state, grid_size)) seen[obs.config_index] = 1;
  std::vector<int> out;
  for (int i = 0; i < grid_size; ++i) {
    if (!seen[i]) out.push_back(i);
  }
  return out;
}

int BaselineSelect(Policy policy, const ResponseModel& model, const MdpState& state, Rng& rng) {
  const std::vector<int> remaining = UnevaluatedConfigs(state, model.grid_size());
  if (remaining.empty()) throw ContractError("no unevaluated configurations remain");
  switch (policy) {
    case Policy::kRandom:
      return remaining[UniformIndex(rng, remaining.size())];
    case Policy::kGreedy: {
      HistoryBatch batch = model.Encode(state, static_cast<int>(remaining.size()));
      const std::vector<Prediction> preds = model.Predict(batch, remaining);
      std::size_t best = 0;
      for (std::size_t i = 1; i < preds.size(); ++i) {
        if (preds[i].mean < preds[best].mean) best = i;
      }
      return remaining[best];
    }
    default:
      throw ArgumentError("baseline selection supports only the random and greedy policies");
  }
}

EpisodeTrace RunEpisode(Learner& learner, const TaskResponseTable& task, const HyperparameterGrid& grid,
                        const EpisodeConfig& cfg) {
  const int n = grid.size();
  cfg.Validate(n);
  if (static_cast<int>(task.responses.size()) != n) {
    throw ShapeError("task " + task.id + " does not match the grid size");
  }
  if (learner.model().grid_size() != n) throw ShapeError("model and grid disagree on the grid size");

  EpisodeTrace trace;
  trace.task_id = task.id;
  trace.method = std::string(PolicyName(cfg.policy));
  trace.policy = cfg.policy;
  trace.seed = cfg.seed;
  trace.n_init = cfg.n_init;

  MdpState state;
  state.task_ref = task.id;
  double best = std::numeric_limits<double>::infinity();
  auto record = [&](int trial, int a, double ms) {
    const double loss = task.responses[a];
    state.Append(a, loss);
    best = std::min(best, loss);
    trace.trials.push_back({trial, a, loss, best, NormalizedRegret(task, best), ms});
  };

  Rng init_rng = MakeStream(cfg.seed, "init");
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  PartialShuffle(pool, static_cast<std::size_t>(cfg.n_init), init_rng);
  for (int i = 0; i < cfg.n_init; ++i) record(i - cfg.n_init + 1, pool[i], 0.0);

  Rng planner_rng(DeriveSeed(DeriveSeed(cfg.seed, "planner"), cfg.planner.seed));
  Rng policy_rng = MakeStream(cfg.seed, "policy");
  Rng tune_rng = MakeStream(cfg.seed, "fine-tune");
  const bool tune = cfg.policy != Policy::kRandom && cfg.fine_tune_steps > 0;
  if (tune) learner.FineTune(state, cfg.fine_tune_steps, cfg.fine_tune_lr, tune_rng);

  for (int trial = 1; trial <= cfg.n_trials; ++trial) {
    const auto start = std::chrono::steady_clock::now();
    int action = -1;
    if (cfg.policy == Policy::kLookaheadMpc || cfg.policy == Policy::kMpc) {
      auto trajs = SimulateTrajectories(learner.model(), state, cfg.planner, planner_rng);
      action = cfg.policy == Policy::kMpc ? MpcSelect(trajs) : LookaheadSelect(trajs);
    } else {
      action = BaselineSelect(cfg.policy, learner.model(), state, policy_rng);
    }
    if (state.Contains(action)) throw InvariantError("policy proposed an evaluated configuration");
    // The last refit cannot influence any decision, so it is skipped.
    if (tune && trial < cfg.n_trials) {
      MdpState next = state;
      next.Append(action, task.responses[action]);
      learner.FineTune(next, cfg.fine_tune_steps, cfg.fine_tune_lr, tune_rng);
    }
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    record(trial, action, ms);
  }
  return trace;
}

EpisodeTrace RunEpisode(const Ensemble& ensemble, const TaskResponseTable& task,
                        const HyperparameterGrid& grid, const EpisodeConfig& cfg) {
  EnsembleLearner learner(ensemble, grid);
  return RunEpisode(learner, task, grid, cfg);
}

void WriteTraceCsv(std::span<const EpisodeTrace> traces, std::ostream& out, bool timing) {
  out << "task_id,policy,seed,trial,config_index,loss,best_so_far,regret,ms\n";
  for (const auto& tr : traces) {
    for (const auto& r : tr.trials) {
      out << tr.task_id << ',' << tr.method << ',' << tr.seed << ',' << r.trial << ','
          << r.config_index << ',' << FormatDouble(r.loss) << ',' << FormatDouble(r.best_so_far)
          << ',' << FormatDouble(r.regret) << ',' << (timing ? FormatDouble(r.wall_ms) : "0") << '\n';
    }
  }
}

void WriteTraceCsv(std::span<const EpisodeTrace> traces, const std::filesystem::path& path,
                   bool timing) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write trace file " + path.string());
  WriteTraceCsv(traces, out, timing);
  if (!out) throw IoError("failed writing trace file " + path.string());
}

std::vector<EpisodeTrace> ReadTraceCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read trace file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "task_id,policy,seed,trial,config_index,loss,best_so_far,regret,ms") {
    throw ParseError(path.string() + ": missing or unexpected trace header");
  }
  std::vector<EpisodeTrace> traces;
  std::map<std::tuple<std::string, std::string, std::uint64_t>, std::size_t> index;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1)) {
      f.push_back(rest.substr(0, pos));
    }
    f.push_back(rest);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 9) throw ParseError(where + ": expected 9 fields");
    const std::string task(f[0]);
    const std::string method(f[1]);
    const auto seed = ParseNumber<std::uint64_t>(f[2], "seed");
    auto key = std::make_tuple(task, method, seed);
    auto it = index.find(key);
    if (it == index.end()) {
      EpisodeTrace tr;
      tr.task_id = task;
      tr.method = method;
      tr.seed = seed;
      tr.policy = ParsePolicy(std::string_view(method).substr(0, method.find('-')));
      it = index.emplace(key, traces.size()).first;
      traces.push_back(std::move(tr));
    }
    EpisodeTrace& tr = traces[it->second];
    TrialRecord r;
    r.trial = ParseNumber<int>(f[3], "trial");
    r.config_index = ParseNumber<int>(f[4], "config_index");
    r.loss = ParseNumber<double>(f[5], "loss");
    r.best_so_far = ParseNumber<double>(f[6], "best_so_far");
    r.regret = ParseNumber<double>(f[7], "regret");
    r.wall_ms = ParseNumber<double>(f[8], "ms");
    if (r.trial <= 0) ++tr.n_init;
    tr.trials.push_back(r);
  }
  return traces;
}

}  // namespace lhpo
