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

#include "lhpo/meta_dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lhpo/errors.h"
#include "lhpo/random.h"

namespace lhpo {
namespace {

using nlohmann::json;

std::string TaskName(int index, int n_tasks) {
  int width = std::max(3, static_cast<int>(std::to_string(n_tasks - 1).size()));
  std::string digits = std::to_string(index);
  return "task-" + std::string(width - digits.size(), '0') + digits;
}

// Unnormalized response of one synthetic task at configuration `x`.
class SyntheticTask {
 public:
  SyntheticTask(SyntheticFamily family, const Eigen::VectorXd& prototype_center,
                const Eigen::MatrixXd& prototype_modes, Rng& rng)
      : family_(family) {
    const int d = static_cast<int>(prototype_center.size());
    center_.resize(d);
    weights_.resize(d);
    for (int j = 0; j < d; ++j) {
      center_[j] = std::clamp(prototype_center[j] + 0.15 * StandardNormal(rng), 0.0, 1.0);
      weights_[j] = UniformReal(rng, 0.5, 2.0);
    }
    modes_ = prototype_modes;
    amplitudes_.resize(modes_.cols());
    for (int k = 0; k < modes_.cols(); ++k) {
      for (int j = 0; j < d; ++j) {
        modes_(j, k) = std::clamp(modes_(j, k) + 0.1 * StandardNormal(rng), 0.0, 1.0);
      }
      amplitudes_[k] = UniformReal(rng, 0.5, 1.0);
    }
  }

  double operator()(const Eigen::VectorXd& x) const {
    const double d = static_cast<double>(x.size());
    switch (family_) {
      case SyntheticFamily::kQuadraticBowl:
        return (weights_.array() * (x - center_).array().square()).sum() / d;
      case SyntheticFamily::kMixtureOfGaussians: {
        const double width2 = 2.0 * 0.0625 * d;
        double value = 0.0;
        for (int k = 0; k < modes_.cols(); ++k) {
          value -= amplitudes_[k] * std::exp(-(x - modes_.col(k)).squaredNorm() / width2);
        }
        return value;
      }
      case SyntheticFamily::kRastriginLike: {
        double value = 0.0;
        for (int j = 0; j < x.size(); ++j) {
          const double z = 2.0 * (x[j] - center_[j]);
          value += weights_[j] * z * z + 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * 2.0 * z));
        }
        return value / d;
      }
    }
    return 0.0;
  }

 private:
  SyntheticFamily family_;
  Eigen::VectorXd center_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd modes_;
  Eigen::VectorXd amplitudes_;
};

const json& Member(const json& object, const char* key) {
  auto it = object.find(key);
  if (it == object.end()) {
    throw ParseError(std::string("missing key \"") + key + "\"");
  }
  return *it;
}

double AsNumber(const json& value, const char* what) {
  if (!value.is_number()) {
    throw ParseError(std::string(what) + " must be a number");
  }
  return value.get<double>();
}

std::vector<std::string> AsStringList(const json& value, const char* what) {
  if (!value.is_array()) {
    throw ParseError(std::string(what) + " must be an array");
  }
  std::vector<std::string> out;
  for (const auto& item : value) {
    if (!item.is_string()) {
      throw ParseError(std::string(what) + " entries must be strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

HyperparameterGrid::HyperparameterGrid(Eigen::MatrixXd configs)
    : configs_(std::move(configs)) {
  if (configs_.rows() < 2) {
    throw InvariantError("grid needs at least 2 configurations");
  }
  if (configs_.cols() < 1) {
    throw InvariantError("grid dimension must be at least 1");
  }
  if (!configs_.allFinite()) {
    throw InvariantError("grid contains non-finite features");
  }
  std::vector<std::vector<double>> rows(configs_.rows());
  for (Eigen::Index i = 0; i < configs_.rows(); ++i) {
    for (Eigen::Index j = 0; j < configs_.cols(); ++j) rows[i].push_back(configs_(i, j));
  }
  std::sort(rows.begin(), rows.end());
  if (std::adjacent_find(rows.begin(), rows.end()) != rows.end()) {
    throw InvariantError("grid contains duplicate configurations");
  }
  columns_ = configs_.transpose();
}

TaskResponseTable TaskResponseTable::FromResponses(std::string id,
                                                   std::vector<double> responses) {
  if (responses.empty()) {
    throw InvariantError("task " + id + " has no responses");
  }
  for (double r : responses) {
    if (!std::isfinite(r)) {
      throw InvariantError("task " + id + " has a non-finite response");
    }
  }
  auto [lo, hi] = std::minmax_element(responses.begin(), responses.end());
  TaskResponseTable task;
  task.loss_min = *lo;
  task.loss_max = *hi;
  task.id = std::move(id);
  task.responses = std::move(responses);
  return task;
}

TaskResponseTable NormalizeTask(const TaskResponseTable& task) {
  if (!(task.loss_max > task.loss_min)) {
    throw DegenerateTaskError("task " + task.id + " has a constant response surface");
  }
  const double range = task.loss_max - task.loss_min;
  TaskResponseTable out;
  out.id = task.id;
  out.responses.reserve(task.responses.size());
  for (double r : task.responses) {
    out.responses.push_back((r - task.loss_min) / range);
  }
  out.loss_min = 0.0;
  out.loss_max = 1.0;
  return out;
}

const TaskResponseTable& MetaDataset::task(std::string_view id) const {
  for (const auto& t : tasks) {
    if (t.id == id) return t;
  }
  throw IndexError("unknown task id " + std::string(id));
}

const std::vector<std::string>& MetaDataset::split_ids(SplitKind kind) const {
  switch (kind) {
    case SplitKind::kTrain:
      return split.train;
    case SplitKind::kValid:
      return split.valid;
    case SplitKind::kTest:
      return split.test;
  }
  return split.train;
}

void MetaDataset::Validate() const {
  const std::size_t n = static_cast<std::size_t>(grid.size());
  if (n < 2) throw InvariantError("grid needs at least 2 configurations");
  std::set<std::string> ids;
  for (const auto& t : tasks) {
    if (!ids.insert(t.id).second) {
      throw InvariantError("duplicate task id " + t.id);
    }
    if (t.responses.size() != n) {
      throw InvariantError("task " + t.id + " has " + std::to_string(t.responses.size()) +
                           " responses, grid has " + std::to_string(n));
    }
    for (double r : t.responses) {
      if (!std::isfinite(r)) throw InvariantError("task " + t.id + " has a non-finite response");
    }
    auto [lo, hi] = std::minmax_element(t.responses.begin(), t.responses.end());
    if (*lo != t.loss_min || *hi != t.loss_max) {
      throw InvariantError("task " + t.id + " has inconsistent loss_min/loss_max");
    }
  }
  std::set<std::string> seen;
  for (const auto* part : {&split.train, &split.valid, &split.test}) {
    for (const auto& id : *part) {
      if (!ids.count(id)) throw InvariantError("split references unknown task " + id);
      if (!seen.insert(id).second) throw InvariantError("task " + id + " appears in more than one split");
    }
  }
  if (seen.size() != ids.size()) {
    for (const auto& id : ids) {
      if (!seen.count(id)) throw InvariantError("task " + id + " is not assigned to any split");
    }
  }
}

SyntheticFamily ParseFamily(std::string_view name) {
  if (name == "quadratic-bowl") return SyntheticFamily::kQuadraticBowl;
  if (name == "mixture-of-gaussians") return SyntheticFamily::kMixtureOfGaussians;
  if (name == "rastrigin-like") return SyntheticFamily::kRastriginLike;
  throw ArgumentError("unknown synthetic family " + std::string(name));
}

std::string_view FamilyName(SyntheticFamily family) {
  switch (family) {
    case SyntheticFamily::kQuadraticBowl:
      return "quadratic-bowl";
    case SyntheticFamily::kMixtureOfGaussians:
      return "mixture-of-gaussians";
    case SyntheticFamily::kRastriginLike:
      return "rastrigin-like";
  }
  return "quadratic-bowl";
}

TaskSplit MakeSplit(std::vector<std::string> ids, int n_valid, int n_test,
                    std::uint64_t seed) {
  const int n = static_cast<int>(ids.size());
  if (n_valid < 0 || n_test < 0 || n_valid + n_test >= n) {
    throw ArgumentError("split sizes leave no training tasks");
  }
  std::sort(ids.begin(), ids.end());
  Rng rng = MakeStream(seed, "split");
  for (int i = n - 1; i > 0; --i) {
    std::swap(ids[i], ids[UniformIndex(rng, static_cast<std::size_t>(i) + 1)]);
  }
  const int n_train = n - n_valid - n_test;
  TaskSplit split;
  split.train.assign(ids.begin(), ids.begin() + n_train);
  split.valid.assign(ids.begin() + n_train, ids.begin() + n_train + n_valid);
  split.test.assign(ids.begin() + n_train + n_valid, ids.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.valid.begin(), split.valid.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

MetaDataset GenerateSyntheticMetaDataset(const SyntheticSpec& spec) {
  if (spec.n_tasks < 3) throw ArgumentError("n_tasks must be at least 3");
  if (spec.grid_size < 8) throw ArgumentError("grid_size must be at least 8");
  if (spec.dim < 1) throw ArgumentError("dim must be at least 1");
  if (!(spec.noise_sd >= 0.0) || !std::isfinite(spec.noise_sd)) {
    throw ArgumentError("noise_sd must be a finite value >= 0");
  }

  Rng grid_rng = MakeStream(spec.seed, "gen-grid");
  Eigen::MatrixXd configs(spec.grid_size, spec.dim);
  for (int i = 0; i < spec.grid_size; ++i) {
    for (int j = 0; j < spec.dim; ++j) configs(i, j) = UniformReal(grid_rng, 0.0, 1.0);
  }

  Rng proto_rng = MakeStream(spec.seed, "gen-prototype");
  Eigen::VectorXd center(spec.dim);
  for (int j = 0; j < spec.dim; ++j) center[j] = UniformReal(proto_rng, 0.25, 0.75);
  Eigen::MatrixXd modes(spec.dim, 3);
  for (int k = 0; k < 3; ++k) {
    for (int j = 0; j < spec.dim; ++j) modes(j, k) = UniformReal(proto_rng, 0.0, 1.0);
  }

  MetaDataset md{HyperparameterGrid(std::move(configs)), {}, {}};
  Rng task_rng = MakeStream(spec.seed, "gen-tasks");
  for (int t = 0; t < spec.n_tasks; ++t) {
    SyntheticTask surface(spec.family, center, modes, task_rng);
    std::vector<double> responses(spec.grid_size);
    for (int i = 0; i < spec.grid_size; ++i) {
      Eigen::VectorXd x = md.grid.config(i);
      responses[i] = surface(x) + spec.noise_sd * StandardNormal(task_rng);
    }
    md.tasks.push_back(
        NormalizeTask(TaskResponseTable::FromResponses(TaskName(t, spec.n_tasks), std::move(responses))));
  }

  std::vector<std::string> ids;
  for (const auto& t : md.tasks) ids.push_back(t.id);
  const int n_test = std::max(1, static_cast<int>(std::lround(0.2 * spec.n_tasks)));
  const int n_valid = std::max(1, static_cast<int>(std::lround(0.1 * spec.n_tasks)));
  md.split = MakeSplit(std::move(ids), n_valid, n_test, spec.seed);
  md.Validate();
  return md;
}

std::string SerializeMetaDataset(const MetaDataset& md) {
  json configs = json::array();
  for (int i = 0; i < md.grid.size(); ++i) {
    json row = json::array();
    for (int j = 0; j < md.grid.dim(); ++j) row.push_back(md.grid.configs()(i, j));
    configs.push_back(std::move(row));
  }
  json tasks = json::array();
  for (const auto& t : md.tasks) {
    tasks.push_back({{"id", t.id}, {"responses", t.responses}});
  }
  json doc = {
      {"grid", {{"dim", md.grid.dim()}, {"configs", std::move(configs)}}},
      {"tasks", std::move(tasks)},
      {"split", {{"train", md.split.train}, {"valid", md.split.valid}, {"test", md.split.test}}},
  };
  return doc.dump() + "\n";
}

MetaDataset ParseMetaDataset(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("meta-dataset must be a JSON object");

  const json& grid = Member(doc, "grid");
  const double dim_value = AsNumber(Member(grid, "dim"), "grid.dim");
  if (dim_value != std::floor(dim_value) || dim_value < 1) {
    throw ParseError("grid.dim must be a positive integer");
  }
  const int dim = static_cast<int>(dim_value);
  const json& rows = Member(grid, "configs");
  if (!rows.is_array()) throw ParseError("grid.configs must be an array");
  Eigen::MatrixXd configs(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array()) throw ParseError("grid.configs rows must be arrays");
    if (rows[i].size() != static_cast<std::size_t>(dim)) {
      throw InvariantError("grid row " + std::to_string(i) + " has " +
                           std::to_string(rows[i].size()) + " features, dim is " +
                           std::to_string(dim));
    }
    for (int j = 0; j < dim; ++j) configs(i, j) = AsNumber(rows[i][j], "grid feature");
  }

  MetaDataset md;
  md.grid = HyperparameterGrid(std::move(configs));

  const json& tasks = Member(doc, "tasks");
  if (!tasks.is_array()) throw ParseError("tasks must be an array");
  for (const auto& t : tasks) {
    const json& id = Member(t, "id");
    if (!id.is_string()) throw ParseError("task id must be a string");
    const json& responses = Member(t, "responses");
    if (!responses.is_array()) throw ParseError("task responses must be an array");
    std::vector<double> values;
    for (const auto& r : responses) values.push_back(AsNumber(r, "response"));
    md.tasks.push_back(TaskResponseTable::FromResponses(id.get<std::string>(), std::move(values)));
  }

  const json& split = Member(doc, "split");
  md.split.train = AsStringList(Member(split, "train"), "split.train");
  md.split.valid = AsStringList(Member(split, "valid"), "split.valid");
  md.split.test = AsStringList(Member(split, "test"), "split.test");
  md.Validate();
  return md;
}

MetaDataset ReadMetaDataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open meta-dataset " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseMetaDataset(buffer.str());
}

void WriteMetaDataset(const MetaDataset& md, const std::filesystem::path& path) {
  md.Validate();
  const std::string text = SerializeMetaDataset(md);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write meta-dataset " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing meta-dataset " + path.string());
}

}  // namespace lhpo
