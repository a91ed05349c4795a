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

#include "lhpo/surrogate.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <utility>

#include "lhpo/errors.h"

namespace lhpo {
namespace {

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<int> Concat(int a, const std::vector<int>& middle, int b) {
  std::vector<int> dims{a};
  dims.insert(dims.end(), middle.begin(), middle.end());
  dims.push_back(b);
  return dims;
}

void CheckAction(int action, const HyperparameterGrid& grid) {
  if (action < 0 || action >= grid.size()) {
    throw IndexError("action index " + std::to_string(action) + " outside grid of size " +
                     std::to_string(grid.size()));
  }
}

// Forward state of a batch of queries. Distinct (config, loss) pairs are
// encoded once and shared by every query whose history contains them.
struct BatchPass {
  Eigen::MatrixXd encoder_in;           // (d+1) x M
  std::vector<std::vector<int>> sets;   // per query: encoder columns, config-sorted
  MlpTape encoder_tape;
  Eigen::MatrixXd encoder_out;          // set_dim x M
  MlpTape head_tape;
  Eigen::MatrixXd head_out;             // 2 x B
};

void ForwardBatch(const SurrogateParams& params, std::span<const LabeledQuery> batch,
                  const HyperparameterGrid& grid, BatchPass& pass, bool record) {
  const int d = grid.dim();
  if (params.arch().config_dim != d) {
    throw ShapeError("surrogate expects config dim " + std::to_string(params.arch().config_dim) +
                     ", grid has " + std::to_string(d));
  }
  std::map<std::pair<int, std::uint64_t>, int> column_of;
  std::vector<Observation> unique;
  pass.sets.assign(batch.size(), {});
  for (std::size_t b = 0; b < batch.size(); ++b) {
    CheckAction(batch[b].action, grid);
    for (const Observation& obs : CanonicalHistory(batch[b].state, grid.size())) {
      auto key = std::make_pair(obs.config_index, std::bit_cast<std::uint64_t>(obs.loss));
      auto [it, inserted] = column_of.emplace(key, static_cast<int>(unique.size()));
      if (inserted) unique.push_back(obs);
      pass.sets[b].push_back(it->second);
    }
  }

  const int set_dim = params.arch().set_dim;
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(set_dim, static_cast<Eigen::Index>(batch.size()));
  if (!unique.empty()) {
    pass.encoder_in.resize(d + 1, static_cast<Eigen::Index>(unique.size()));
    for (std::size_t k = 0; k < unique.size(); ++k) {
      pass.encoder_in.col(k).head(d) = grid.config(unique[k].config_index);
      pass.encoder_in(d, k) = unique[k].loss;
    }
    MlpForward(params.encoder(), params.weights(), pass.encoder_in, pass.encoder_out,
               record ? &pass.encoder_tape : nullptr);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto& set = pass.sets[b];
      if (set.empty()) continue;
      Eigen::VectorXd sum = pass.encoder_out.col(set[0]);
      for (std::size_t i = 1; i < set.size(); ++i) sum += pass.encoder_out.col(set[i]);
      pooled.col(b) = sum / static_cast<double>(set.size());
    }
  }

  Eigen::MatrixXd head_in(d + set_dim, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    head_in.col(b).head(d) = grid.config(batch[b].action);
  }
  head_in.bottomRows(set_dim) = pooled;
  MlpForward(params.head(), params.weights(), head_in, pass.head_out,
             record ? &pass.head_tape : nullptr);
}

}  // namespace

SurrogateParams::SurrogateParams(Architecture arch) : arch_(std::move(arch)) {
  if (arch_.config_dim < 1 || arch_.set_dim < 1) {
    throw ArgumentError("architecture dimensions must be positive");
  }
  encoder_ = MlpLayout(Concat(arch_.config_dim + 1, arch_.encoder_hidden, arch_.set_dim), 0);
  head_ = MlpLayout(Concat(arch_.config_dim + arch_.set_dim, arch_.head_hidden, 2), encoder_.end());
  weights_.assign(head_.end(), 0.0);
}

SurrogateParams SurrogateParams::Initialize(const Architecture& arch, std::uint64_t seed) {
  SurrogateParams params(arch);
  Rng rng = MakeStream(seed, "surrogate-init");
  MlpInitialize(params.encoder_, params.weights(), rng);
  MlpInitialize(params.head_, params.weights(), rng);
  return params;
}

bool MdpState::Contains(int config_index) const {
  return std::any_of(history.begin(), history.end(),
                     [&](const Observation& o) { return o.config_index == config_index; });
}

void MdpState::Append(int config_index, double loss) {
  if (!std::isfinite(loss)) throw ContractError("observed loss must be finite");
  if (Contains(config_index)) {
    throw ContractError("configuration " + std::to_string(config_index) + " already in history");
  }
  history.push_back({config_index, loss});
}

std::vector<Observation> CanonicalHistory(const MdpState& state, int grid_size) {
  std::vector<Observation> sorted = state.history;
  for (const Observation& o : sorted) {
    if (o.config_index < 0 || o.config_index >= grid_size) {
      throw IndexError("history references config " + std::to_string(o.config_index) +
                       " outside grid of size " + std::to_string(grid_size));
    }
    if (!std::isfinite(o.loss)) throw ContractError("history contains a non-finite loss");
  }
  std::sort(sorted.begin(), sorted.end(), [](const Observation& a, const Observation& b) {
    return a.config_index < b.config_index;
  });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].config_index == sorted[i - 1].config_index) {
      throw ContractError("history contains config " + std::to_string(sorted[i].config_index) +
                          " twice");
    }
  }
  return sorted;
}

Eigen::VectorXd EncodeHistorySum(const SurrogateParams& params, const MdpState& state,
                                 const HyperparameterGrid& grid) {
  const int d = grid.dim();
  if (params.arch().config_dim != d) throw ShapeError("surrogate / grid dimension mismatch");
  const std::vector<Observation> sorted = CanonicalHistory(state, grid.size());
  if (sorted.empty()) return Eigen::VectorXd::Zero(params.arch().set_dim);
  Eigen::MatrixXd inputs(d + 1, static_cast<Eigen::Index>(sorted.size()));
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    inputs.col(k).head(d) = grid.config(sorted[k].config_index);
    inputs(d, k) = sorted[k].loss;
  }
  Eigen::MatrixXd encoded;
  MlpForward(params.encoder(), params.weights(), inputs, encoded);
  Eigen::VectorXd sum = encoded.col(0);
  for (Eigen::Index k = 1; k < encoded.cols(); ++k) sum += encoded.col(k);
  return sum;
}

Eigen::VectorXd EncodeHistory(const SurrogateParams& params, const MdpState& state,
                              const HyperparameterGrid& grid) {
  Eigen::VectorXd sum = EncodeHistorySum(params, state, grid);
  if (state.history.empty()) return sum;
  return sum / static_cast<double>(state.history.size());
}

std::vector<Prediction> PredictFromEncoding(const SurrogateParams& params,
                                            const HyperparameterGrid& grid,
                                            std::span<const int> actions,
                                            const Eigen::MatrixXd& pooled) {
  const int d = grid.dim();
  const int set_dim = params.arch().set_dim;
  if (pooled.rows() != set_dim || pooled.cols() != static_cast<Eigen::Index>(actions.size())) {
    throw ShapeError("pooled encoding shape does not match the action batch");
  }
  Eigen::MatrixXd head_in(d + set_dim, pooled.cols());
  for (std::size_t b = 0; b < actions.size(); ++b) {
    CheckAction(actions[b], grid);
    head_in.col(b).head(d) = grid.config(actions[b]);
  }
  head_in.bottomRows(set_dim) = pooled;
  Eigen::MatrixXd out;
  MlpForward(params.head(), params.weights(), head_in, out);
  std::vector<Prediction> preds(actions.size());
  for (std::size_t b = 0; b < actions.size(); ++b) {
    preds[b] = {out(0, b), VarianceFromRaw(out(1, b))};
  }
  return preds;
}

Prediction Predict(const SurrogateParams& params, const MdpState& state, int action,
                   const HyperparameterGrid& grid) {
  CheckAction(action, grid);
  Eigen::MatrixXd pooled = EncodeHistory(params, state, grid);
  const int actions[] = {action};
  return PredictFromEncoding(params, grid, actions, pooled).front();
}

double VarianceFromRaw(double raw) {
  const double softplus = raw > 0.0 ? raw + std::log1p(std::exp(-raw)) : std::log1p(std::exp(raw));
  return softplus + kVarianceFloor;
}

double GaussianNll(const Prediction& pred, double target) {
  if (!std::isfinite(pred.mean) || !std::isfinite(pred.variance) || !std::isfinite(target)) {
    throw NonFiniteError("gaussian_nll received a non-finite input");
  }
  if (!(pred.variance > 0.0)) throw ContractError("variance must be positive");
  const double r = target - pred.mean;
  return 0.5 * std::log(pred.variance) + r * r / (2.0 * pred.variance);
}

double BatchNll(const SurrogateParams& params, std::span<const LabeledQuery> batch,
                const HyperparameterGrid& grid) {
  if (batch.empty()) throw ContractError("NLL batch must be non-empty");
  BatchPass pass;
  ForwardBatch(params, batch, grid, pass, false);
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    total += GaussianNll({pass.head_out(0, b), VarianceFromRaw(pass.head_out(1, b))}, batch[b].target);
  }
  return total / static_cast<double>(batch.size());
}

NllGradient ComputeNllGradient(const SurrogateParams& params, std::span<const LabeledQuery> batch,
                               const HyperparameterGrid& grid) {
  if (batch.empty()) throw ContractError("NLL batch must be non-empty");
  BatchPass pass;
  ForwardBatch(params, batch, grid, pass, true);

  const double scale = 1.0 / static_cast<double>(batch.size());
  NllGradient result;
  result.grad.assign(params.size(), 0.0);
  Eigen::MatrixXd d_head_out(2, static_cast<Eigen::Index>(batch.size()));
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double mean = pass.head_out(0, b);
    const double raw = pass.head_out(1, b);
    const double var = VarianceFromRaw(raw);
    const double r = batch[b].target - mean;
    total += GaussianNll({mean, var}, batch[b].target);
    d_head_out(0, b) = -r / var * scale;
    d_head_out(1, b) = (0.5 / var - 0.5 * r * r / (var * var)) * Sigmoid(raw) * scale;
  }
  result.loss = total * scale;

  Eigen::MatrixXd d_head_in;
  MlpBackward(params.head(), params.weights(), pass.head_tape, d_head_out, result.grad,
              &d_head_in);
  if (pass.encoder_out.cols() == 0) return result;

  const int set_dim = params.arch().set_dim;
  Eigen::MatrixXd d_encoder_out = Eigen::MatrixXd::Zero(set_dim, pass.encoder_out.cols());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& set = pass.sets[b];
    if (set.empty()) continue;
    Eigen::VectorXd share = d_head_in.col(b).tail(set_dim) / static_cast<double>(set.size());
    for (int column : set) d_encoder_out.col(column) += share;
  }
  MlpBackward(params.encoder(), params.weights(), pass.encoder_tape, d_encoder_out, result.grad);
  return result;
}

void AdamStep(AdamState& state, std::span<double> params, std::span<const double> grad, double lr,
              const AdamHyper& hyper) {
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (grad.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ShapeError("Adam state, parameters and gradient must have the same length");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grad[i];
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
  }
}

}  // namespace lhpo
