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

#include "lhpo/evaluation.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "lhpo/errors.h"

namespace lhpo {
namespace {

std::string Num(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void MeanSd(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
}

std::ofstream OpenCsv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void WriteTable(const RankTable& table, const std::filesystem::path& path) {
  std::ofstream out = OpenCsv(path);
  out << "method";
  for (int t : table.trials) out << ",t" << t << "_mean,t" << t << "_sd";
  out << '\n';
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    out << table.methods[m];
    for (std::size_t c = 0; c < table.trials.size(); ++c) {
      out << ',' << Num(table.mean[m][c]) << ',' << Num(table.sd[m][c]);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void WriteCurve(const Curve& curve, const std::filesystem::path& path) {
  std::ofstream out = OpenCsv(path);
  out << "trial,mean,sd\n";
  for (std::size_t i = 0; i < curve.trials.size(); ++i) {
    out << curve.trials[i] << ',' << Num(curve.mean[i]) << ',' << Num(curve.sd[i]) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

double NormalizedRegret(const TaskResponseTable& task, double best_observed) {
  const double range = task.loss_max - task.loss_min;
  if (!(range > 0.0)) throw DegenerateTaskError("task " + task.id + " has no loss range");
  return (best_observed - task.loss_min) / range;
}

double NormalizedRegret(const TaskResponseTable& task, std::span<const double> observed) {
  if (observed.empty()) throw ContractError("regret needs at least one observed loss");
  return NormalizedRegret(task, *std::min_element(observed.begin(), observed.end()));
}

std::vector<double> FractionalRanks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share rank mean(i+1..j+1).
    const double rank = 0.5 * static_cast<double>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

std::map<std::string, double> AverageRank(const std::map<std::string, double>& regrets) {
  if (regrets.size() < 2) throw ContractError("ranking needs at least two methods");
  std::vector<double> values;
  for (const auto& [name, v] : regrets) {
    if (!std::isfinite(v)) throw ContractError("regret of " + name + " is not finite");
    values.push_back(v);
  }
  const std::vector<double> ranks = FractionalRanks(values);
  std::map<std::string, double> out;
  std::size_t i = 0;
  for (const auto& entry : regrets) out[entry.first] = ranks[i++];
  return out;
}

Report AggregateReport(std::span<const EpisodeTrace> traces, std::span<const std::string> task_ids,
                       std::span<const int> checkpoints) {
  if (traces.empty()) throw IncompleteDesignError("no traces to aggregate");
  std::set<std::string> methods;
  std::set<std::string> tasks(task_ids.begin(), task_ids.end());
  std::set<std::uint64_t> seeds;
  for (const auto& tr : traces) {
    methods.insert(tr.method);
    if (task_ids.empty()) tasks.insert(tr.task_id);
    seeds.insert(tr.seed);
  }
  if (methods.size() < 2) throw ContractError("a rank table needs at least two methods");

  std::map<std::tuple<std::string, std::string, std::uint64_t>, const EpisodeTrace*> cells;
  for (const auto& tr : traces) {
    auto key = std::make_tuple(tr.method, tr.task_id, tr.seed);
    if (!cells.emplace(key, &tr).second) {
      throw IncompleteDesignError("duplicate trace for " + tr.method + " / " + tr.task_id +
                                  " / seed " + std::to_string(tr.seed));
    }
  }

  int horizon = -1;
  for (const auto& tr : traces) {
    const int planned = static_cast<int>(tr.trials.size()) - tr.n_init;
    horizon = horizon < 0 ? planned : std::min(horizon, planned);
  }
  const int max_checkpoint = checkpoints.empty() ? 0 : *std::max_element(checkpoints.begin(), checkpoints.end());

  std::vector<std::string> holes;
  for (const auto& m : methods) {
    for (const auto& t : tasks) {
      for (auto s : seeds) {
        auto it = cells.find({m, t, s});
        if (it == cells.end()) {
          holes.push_back(m + " / " + t + " / seed " + std::to_string(s));
        } else if (static_cast<int>(it->second->trials.size()) - it->second->n_init < max_checkpoint) {
          holes.push_back(m + " / " + t + " / seed " + std::to_string(s) + " (only " +
                          std::to_string(it->second->trials.size() - it->second->n_init) + " trials)");
        }
      }
    }
  }
  if (!holes.empty()) {
    std::string msg = "incomplete design, missing cells:";
    for (const auto& h : holes) msg += "\n  " + h;
    throw IncompleteDesignError(msg);
  }
  for (int c : checkpoints) {
    if (c < 1) throw ArgumentError("checkpoint trials must be >= 1");
  }

  Report report;
  report.methods.assign(methods.begin(), methods.end());
  report.checkpoints.assign(checkpoints.begin(), checkpoints.end());
  report.cells = static_cast<int>(tasks.size() * seeds.size());
  const std::size_t n_methods = report.methods.size();

  // values[m][trial-1][cell]
  std::vector<std::vector<std::vector<double>>> regrets(
      n_methods, std::vector<std::vector<double>>(horizon));
  auto ranks = regrets;
  std::vector<double> cell_values(n_methods);
  for (int trial = 1; trial <= horizon; ++trial) {
    for (const auto& t : tasks) {
      for (auto s : seeds) {
        for (std::size_t m = 0; m < n_methods; ++m) {
          cell_values[m] = cells.at({report.methods[m], t, s})->RegretAt(trial);
        }
        const std::vector<double> r = FractionalRanks(cell_values);
        for (std::size_t m = 0; m < n_methods; ++m) {
          regrets[m][trial - 1].push_back(cell_values[m]);
          ranks[m][trial - 1].push_back(r[m]);
        }
      }
    }
  }

  auto make_curve = [&](const std::string& method, const std::vector<std::vector<double>>& per_trial) {
    Curve c;
    c.method = method;
    for (int trial = 1; trial <= horizon; ++trial) {
      double mean, sd;
      MeanSd(per_trial[trial - 1], mean, sd);
      c.trials.push_back(trial);
      c.mean.push_back(mean);
      c.sd.push_back(sd);
    }
    return c;
  };
  for (std::size_t m = 0; m < n_methods; ++m) {
    report.regret.push_back(make_curve(report.methods[m], regrets[m]));
    report.rank.push_back(make_curve(report.methods[m], ranks[m]));
  }
  auto make_table = [&](const std::vector<Curve>& curves) {
    RankTable table;
    table.methods = report.methods;
    table.trials = report.checkpoints;
    for (const auto& c : curves) {
      std::vector<double> mean, sd;
      for (int t : report.checkpoints) {
        mean.push_back(c.mean[t - 1]);
        sd.push_back(c.sd[t - 1]);
      }
      table.mean.push_back(std::move(mean));
      table.sd.push_back(std::move(sd));
    }
    return table;
  };
  report.rank_table = make_table(report.rank);
  report.regret_table = make_table(report.regret);
  return report;
}

void WriteReport(const Report& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "curves", ec);
  if (ec) throw IoError("cannot create report directory " + dir.string() + ": " + ec.message());
  WriteTable(report.rank_table, dir / "rank.csv");
  WriteTable(report.regret_table, dir / "regret.csv");
  for (std::size_t m = 0; m < report.methods.size(); ++m) {
    WriteCurve(report.regret[m], dir / "curves" / ("regret_" + report.methods[m] + ".csv"));
    WriteCurve(report.rank[m], dir / "curves" / ("rank_" + report.methods[m] + ".csv"));
  }
}

}  // namespace lhpo
