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

#include "lhpo/meta_train.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <thread>

#include "lhpo/errors.h"

namespace lhpo {
namespace {

double ElapsedMs(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

int UniformIn(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(UniformIndex(rng, static_cast<std::size_t>(hi - lo + 1)));
}

}  // namespace

Quadruple SampleQuadruple(const MetaDataset& md, std::string_view task_id, int t, Rng& rng) {
  const TaskResponseTable& task = md.task(task_id);
  const int n = md.grid.size();
  if (t < 1 || t > n - 1) {
    throw ArgumentError("history length " + std::to_string(t) + " outside [1, " +
                        std::to_string(n - 1) + "]");
  }
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  PartialShuffle(pool, static_cast<std::size_t>(t) + 1, rng);

  Quadruple q;
  q.task_id = task.id;
  q.query.state.task_ref = task.id;
  q.query.state.history.reserve(t);
  for (int i = 0; i < t; ++i) q.query.state.history.push_back({pool[i], task.responses[pool[i]]});
  q.query.action = pool[t];
  q.query.target = task.responses[pool[t]];
  return q;
}

int MetaTrainConfig::EffectiveTMax(int grid_size) const { return std::min(t_max, grid_size - 1); }

void MetaTrainConfig::Validate(int grid_size) const {
  if (task_batch_size < 1) throw ArgumentError("task_batch_size must be >= 1");
  if (minibatch_size < 1) throw ArgumentError("minibatch_size must be >= 1");
  if (inner_steps < 1) throw ArgumentError("inner_steps must be >= 1");
  if (!(inner_lr > 0.0) || !(outer_lr > 0.0)) throw ArgumentError("learning rates must be positive");
  if (t_min < 1) throw ArgumentError("t_min must be >= 1");
  if (t_min > EffectiveTMax(grid_size)) throw ArgumentError("t_min exceeds t_max");
  if (max_outer_iters < 0) throw ArgumentError("max_outer_iters must be >= 0");
  if (eval_every < 1) throw ArgumentError("eval_every must be >= 1");
  if (patience < 1) throw ArgumentError("patience must be >= 1");
  if (valid_quadruples < 1) throw ArgumentError("valid_quadruples must be >= 1");
}

EvalMetrics EvaluateNll(const ResponseModel& model, const MetaDataset& md, SplitKind split, int n,
                        Rng& rng, int t_min, int t_max) {
  const auto& ids = md.split_ids(split);
  if (ids.empty()) throw ContractError("cannot evaluate on an empty split");
  if (n < 1) throw ArgumentError("evaluation needs at least one quadruple");
  t_max = std::min(t_max, md.grid.size() - 1);
  t_min = std::clamp(t_min, 1, t_max);
  double nll = 0.0;
  double mse = 0.0;
  for (int i = 0; i < n; ++i) {
    const std::string& id = ids[UniformIndex(rng, ids.size())];
    const int t = UniformIn(rng, t_min, t_max);
    Quadruple q = SampleQuadruple(md, id, t, rng);
    const Prediction pred = model.PredictOne(q.query.state, q.query.action);
    nll += GaussianNll(pred, q.query.target);
    const double err = pred.mean - q.query.target;
    mse += err * err;
  }
  return {nll / n, mse / n};
}

EvalMetrics EvaluateNll(const Ensemble& ensemble, const MetaDataset& md, SplitKind split, int n,
                        Rng& rng, int t_min, int t_max) {
  EnsembleModel model(ensemble, md.grid);
  return EvaluateNll(model, md, split, n, rng, t_min, t_max);
}

void ReptileOuterStep(SurrogateParams& params, int n_tasks, double outer_lr,
                      const InnerAdaptation& adapt) {
  if (n_tasks < 1) throw ArgumentError("outer step needs at least one task");
  std::vector<double> delta(params.size(), 0.0);
  auto base = params.weights();
  for (int slot = 0; slot < n_tasks; ++slot) {
    SurrogateParams task_params = params;
    adapt(slot, task_params);
    auto adapted = task_params.weights();
    if (adapted.size() != base.size()) throw ShapeError("inner adaptation changed the parameter count");
    for (std::size_t k = 0; k < delta.size(); ++k) delta[k] += adapted[k] - base[k];
  }
  const double scale = outer_lr / static_cast<double>(n_tasks);
  for (std::size_t k = 0; k < delta.size(); ++k) base[k] += scale * delta[k];
}

MemberTrainResult MetaTrainMember(const SurrogateParams& init, const MetaDataset& md,
                                  const MetaTrainConfig& cfg, std::uint64_t stream_seed) {
  const int n = md.grid.size();
  cfg.Validate(n);
  if (md.split.train.empty()) throw ContractError("meta-training needs a non-empty train split");
  if (md.split.valid.empty()) throw ContractError("meta-training needs a non-empty valid split");
  const int t_max = cfg.EffectiveTMax(n);
  const auto start = std::chrono::steady_clock::now();

  Rng rng = MakeStream(stream_seed, "train");
  Rng valid_rng = MakeStream(stream_seed, "valid");
  auto validate = [&](const SurrogateParams& params) {
    Ensemble single{{params}, {0}};
    return EvaluateNll(single, md, SplitKind::kValid, cfg.valid_quadruples, valid_rng, cfg.t_min, t_max);
  };

  MemberTrainResult result;
  SurrogateParams theta = init;
  const EvalMetrics initial = validate(theta);
  result.initial_valid_nll = initial.nll;
  result.best_valid_nll = initial.nll;
  result.params = theta;
  result.log.push_back({0, std::nan(""), initial.nll, initial.mse, ElapsedMs(start)});

  double train_sum = 0.0;
  long train_count = 0;
  int evals_since_best = 0;
  std::vector<std::string> tasks(cfg.task_batch_size);
  std::vector<LabeledQuery> batch(cfg.minibatch_size);
  for (int iter = 1; iter <= cfg.max_outer_iters; ++iter) {
    const int t = UniformIn(rng, cfg.t_min, t_max);
    for (auto& id : tasks) id = md.split.train[UniformIndex(rng, md.split.train.size())];

    ReptileOuterStep(theta, cfg.task_batch_size, cfg.outer_lr, [&](int slot, SurrogateParams& local) {
      AdamState adam;
      for (int step = 0; step < cfg.inner_steps; ++step) {
        for (auto& q : batch) q = SampleQuadruple(md, tasks[slot], t, rng).query;
        NllGradient g = ComputeNllGradient(local, batch, md.grid);
        if (!std::isfinite(g.loss)) {
          throw NonFiniteError("non-finite training loss at outer iteration " + std::to_string(iter) +
                               " (task " + tasks[slot] + ", t=" + std::to_string(t) +
                               ", stream seed " + std::to_string(stream_seed) + ")");
        }
        train_sum += g.loss;
        ++train_count;
        if (cfg.inner_optimizer == InnerOptimizer::kAdam) {
          AdamStep(adam, local, g.grad, cfg.inner_lr);
        } else {
          auto w = local.weights();
          for (std::size_t k = 0; k < w.size(); ++k) w[k] -= cfg.inner_lr * g.grad[k];
        }
      }
    });
    result.iterations_run = iter;

    if (iter % cfg.eval_every != 0) continue;
    const EvalMetrics metrics = validate(theta);
    if (!std::isfinite(metrics.nll)) {
      throw NonFiniteError("non-finite validation NLL at outer iteration " + std::to_string(iter) +
                           " (stream seed " + std::to_string(stream_seed) + ")");
    }
    result.log.push_back({iter, train_count ? train_sum / train_count : std::nan(""), metrics.nll,
                          metrics.mse, ElapsedMs(start)});
    train_sum = 0.0;
    train_count = 0;
    if (metrics.nll < result.best_valid_nll) {
      result.best_valid_nll = metrics.nll;
      result.best_iter = iter;
      result.params = theta;
      evals_since_best = 0;
    } else if (++evals_since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

MetaTrainResult ReptileMetaTrain(const Ensemble& ensemble, const MetaDataset& md,
                                 const MetaTrainConfig& cfg, int jobs) {
  ensemble.Validate();
  if (ensemble.arch().config_dim != md.grid.dim()) {
    throw ShapeError("ensemble architecture does not match the grid dimension");
  }
  cfg.Validate(md.grid.size());
  const std::size_t n = ensemble.size();
  std::vector<MemberTrainResult> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = MetaTrainMember(ensemble.members[i], md, cfg,
                                     DeriveSeed(cfg.seed, "member-" + std::to_string(i)));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, static_cast<int>(n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  MetaTrainResult out;
  out.ensemble.member_seeds = ensemble.member_seeds;
  for (auto& r : results) out.ensemble.members.push_back(r.params);
  out.members = std::move(results);
  return out;
}

void WriteTrainLogCsv(std::span<const TrainLogRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write training log " + path.string());
  out << "outer_iter,train_nll,valid_nll,valid_mse,wall_ms\n";
  for (const auto& r : rows) {
    out << r.outer_iter << ',' << std::setprecision(10);
    if (std::isfinite(r.train_nll)) out << r.train_nll;
    out << ',' << r.valid_nll << ',' << r.valid_mse << ',' << std::fixed << std::setprecision(1)
        << r.wall_ms << std::defaultfloat << '\n';
  }
  if (!out) throw IoError("failed writing training log " + path.string());
}

}  // namespace lhpo
