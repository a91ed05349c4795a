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

#include "lhpo/cli.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "lhpo/checkpoint.h"
#include "lhpo/ensemble.h"
#include "lhpo/errors.h"
#include "lhpo/evaluation.h"
#include "lhpo/hpo_loop.h"
#include "lhpo/meta_dataset.h"
#include "lhpo/meta_train.h"

namespace lhpo {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Every option is registered together with a way to echo its resolved value,
// so the manifest always lists exactly the options a command accepts.
class OptionSet {
 public:
  explicit OptionSet(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* Add(const std::string& name, T& var, const std::string& desc) {
    CLI::Option* opt = app_->add_option("--" + name, var, desc)->capture_default_str();
    if constexpr (requires { var.push_back(var.front()); }) opt->delimiter(',');
    dump_.emplace_back(name, [&var] { return json(var); });
    return opt;
  }

  CLI::Option* Flag(const std::string& name, bool& var, const std::string& desc) {
    dump_.emplace_back(name, [&var] { return json(var); });
    return app_->add_flag("--" + name, var, desc);
  }

  json Resolved() const {
    json j = json::object();
    for (const auto& [name, fn] : dump_) j[name] = fn();
    return j;
  }

  std::vector<std::string> Names() const {
    std::vector<std::string> names{"config"};
    for (const auto& entry : dump_) names.push_back(entry.first);
    return names;
  }

  CLI::App* app() const { return app_; }

 private:
  CLI::App* app_;
  std::vector<std::pair<std::string, std::function<json()>>> dump_;
};

struct Common {
  std::string outdir = "out";
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string config;
};

struct GenOptions {
  int tasks = 30;
  int grid = 200;
  int dim = 3;
  std::string family = "quadratic-bowl";
  double noise = 0.02;
  int n_valid = -1;
  int n_test = -1;
  std::string out;
};

struct TrainOptions {
  std::string data;
  int members = 5;
  MetaTrainConfig train;
  std::string inner_optimizer = "adam";
};

struct EpisodeOptions {
  std::string data;
  std::string checkpoint;
  std::vector<std::string> policies{"lookahead_mpc", "mpc", "greedy", "random"};
  std::vector<int> horizons;
  std::vector<int> trajectories;
  std::vector<std::string> fine_tune;
  int particles = 1;
  int trials = 50;
  int n_init = 3;
  int fine_tune_steps = 10;
  double fine_tune_lr = 1e-3;
  int seeds = 3;
  std::string split = "test";
  bool timing = false;
};

struct ReportOptions {
  std::vector<std::string> traces;
  std::vector<int> checkpoints{15, 33, 50};
  std::string report_dir;
};

std::string Suggest(const std::string& word, const std::vector<std::string>& candidates) {
  std::string best;
  int best_d = 1 << 30;
  for (const auto& c : candidates) {
    const int d = EditDistance(word, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  const int limit = std::max<int>(2, static_cast<int>(word.size()) / 3);
  return best_d <= limit ? best : std::string();
}

std::string FlagName(const std::string& token) {
  return token.substr(2, token.find('=') == std::string::npos ? std::string::npos : token.find('=') - 2);
}

// Rejects long options the command does not know, with a suggestion.
void CheckFlags(const std::vector<std::string>& tokens, const OptionSet& options) {
  const auto names = options.Names();
  for (const auto& tok : tokens) {
    if (tok.size() < 3 || tok.rfind("--", 0) != 0) continue;
    const std::string name = FlagName(tok);
    if (name == "help" || std::find(names.begin(), names.end(), name) != names.end()) continue;
    std::string msg = "unknown option '--" + name + "'";
    const std::string hint = Suggest(name, names);
    if (!hint.empty()) msg += " (did you mean '--" + hint + "'?)";
    throw ConfigError(msg);
  }
}

std::string FindConfigPath(const std::vector<std::string>& tokens) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == "--config" && i + 1 < tokens.size()) return tokens[i + 1];
    if (tokens[i].rfind("--config=", 0) == 0) return tokens[i].substr(9);
  }
  return {};
}

// Appends file values for every option the command line leaves unset.
void MergeConfigFile(const std::string& path, const std::string& command, const OptionSet& options,
                     std::vector<std::string>& tokens) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("config file " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("config file " + path + " must hold a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "command" && key != "config") throw ConfigError("unknown top-level key '" + key + "' in " + path);
  }
  if (doc.contains("command") && doc["command"] != command) {
    throw ConfigError("config file " + path + " is for command " + doc["command"].dump());
  }
  if (!doc.contains("config")) return;
  const json& cfg = doc["config"];
  if (!cfg.is_object()) throw ParseError("\"config\" in " + path + " must be an object");

  const auto names = options.Names();
  std::vector<std::string> given;
  for (const auto& tok : tokens) {
    if (tok.rfind("--", 0) == 0) given.push_back(FlagName(tok));
  }
  std::vector<std::string> extra;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config" || std::find(names.begin(), names.end(), key) == names.end()) {
      std::string msg = "unknown config key '" + key + "' in " + path;
      const std::string hint = Suggest(key, names);
      if (!hint.empty()) msg += " (did you mean '" + hint + "'?)";
      throw ConfigError(msg);
    }
    if (std::find(given.begin(), given.end(), key) != given.end()) continue;
    auto scalar = [&](const json& v) -> std::string {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number() || v.is_boolean()) return v.dump();
      throw ConfigError("config key '" + key + "' has an unsupported value " + v.dump());
    };
    const CLI::Option* opt = options.app()->get_option_no_throw("--" + key);
    if (opt != nullptr && opt->get_expected_max() == 0) {
      if (!value.is_boolean()) throw ConfigError("config key '" + key + "' expects true or false");
      if (value.get<bool>()) extra.push_back("--" + key);
      continue;
    }
    std::string text;
    if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i) text += (i ? "," : "") + scalar(value[i]);
    } else {
      text = scalar(value);
    }
    extra.push_back("--" + key);
    extra.push_back(text);
  }
  tokens.insert(tokens.end(), extra.begin(), extra.end());
}

void AddCommon(OptionSet& set, Common& c, const std::string& default_outdir_note) {
  set.Add("outdir", c.outdir, "Output directory" + default_outdir_note);
  set.Add("seed", c.seed, "Global seed (falls back to $LHPO_SEED, then 0)");
  set.Add("jobs", c.jobs, "Parallel workers")->check(CLI::PositiveNumber);
  set.app()->add_option("--config", c.config, "JSON file {\"command\", \"config\": {...}}");
}

fs::path Resolve(const std::string& value, const fs::path& fallback) {
  return value.empty() ? fallback : fs::path(value);
}

void EnsureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void WriteManifest(const Common& common, const std::string& command, const OptionSet& options) {
  const fs::path outdir(common.outdir);
  EnsureDir(outdir);
  json manifest;
  manifest["command"] = command;
  manifest["config"] = options.Resolved();
  const std::string text = manifest.dump(2) + "\n";
  for (const fs::path& p : {outdir / "manifest.json", outdir / ("manifest_" + command + ".json")}) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) throw IoError("cannot write manifest " + p.string());
  }
}

template <typename Fn>
void ParallelFor(std::size_t n, int jobs, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = static_cast<int>(std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int GenData(const Common& common, const GenOptions& opt, std::ostream& out) {
  SyntheticSpec spec;
  spec.n_tasks = opt.tasks;
  spec.grid_size = opt.grid;
  spec.dim = opt.dim;
  spec.family = ParseFamily(opt.family);
  spec.noise_sd = opt.noise;
  spec.seed = DeriveSeed(common.seed, "gen");
  MetaDataset md = GenerateSyntheticMetaDataset(spec);
  if (opt.n_valid >= 0 || opt.n_test >= 0) {
    std::vector<std::string> ids;
    for (const auto& t : md.tasks) ids.push_back(t.id);
    const int n_valid = opt.n_valid >= 0 ? opt.n_valid : static_cast<int>(md.split.valid.size());
    const int n_test = opt.n_test >= 0 ? opt.n_test : static_cast<int>(md.split.test.size());
    md.split = MakeSplit(ids, n_valid, n_test, DeriveSeed(common.seed, "split"));
    md.Validate();
  }
  const fs::path path = Resolve(opt.out, fs::path(common.outdir) / "metadataset.json");
  if (path.has_parent_path()) EnsureDir(path.parent_path());
  WriteMetaDataset(md, path);
  out << "wrote " << path.string() << " (" << md.tasks.size() << " tasks: " << md.split.train.size()
      << " train, " << md.split.valid.size() << " valid, " << md.split.test.size() << " test)\n";
  return 0;
}

int MetaTrain(const Common& common, TrainOptions opt, std::ostream& out) {
  const fs::path outdir(common.outdir);
  const MetaDataset md = ReadMetaDataset(Resolve(opt.data, outdir / "metadataset.json"));
  if (opt.members < 1) throw ArgumentError("--members must be >= 1");
  if (opt.inner_optimizer == "adam") {
    opt.train.inner_optimizer = InnerOptimizer::kAdam;
  } else if (opt.inner_optimizer == "sgd") {
    opt.train.inner_optimizer = InnerOptimizer::kSgd;
  } else {
    throw ArgumentError("--inner-optimizer must be adam or sgd");
  }
  opt.train.seed = DeriveSeed(common.seed, "meta-train");
  const Ensemble init =
      InitEnsemble(opt.members, Architecture::Default(md.grid.dim()), DeriveSeed(common.seed, "init"));
  MetaTrainResult result = ReptileMetaTrain(init, md, opt.train, common.jobs);

  EnsureDir(outdir / "checkpoints");
  EnsureDir(outdir / "logs");
  WriteEnsembleCheckpoint(result.ensemble, outdir / "checkpoints" / "ensemble.lhpo");
  for (std::size_t i = 0; i < result.members.size(); ++i) {
    const auto& m = result.members[i];
    WriteTrainLogCsv(m.log, outdir / "logs" / ("meta_train_member_" + std::to_string(i) + ".csv"));
    out << "member " << i << ": valid nll " << m.initial_valid_nll << " -> " << m.best_valid_nll
        << " (best at outer iteration " << m.best_iter << " of " << m.iterations_run << ")\n";
  }
  out << "wrote " << (outdir / "checkpoints" / "ensemble.lhpo").string() << "\n";
  return 0;
}

struct Method {
  std::string label;
  EpisodeConfig cfg;
};

std::vector<Method> ExpandMethods(const EpisodeOptions& opt) {
  std::vector<bool> tune_settings;
  for (const auto& f : opt.fine_tune) {
    if (f == "on") {
      tune_settings.push_back(true);
    } else if (f == "off") {
      tune_settings.push_back(false);
    } else {
      throw ArgumentError("--fine-tune values must be on or off, got '" + f + "'");
    }
  }
  if (tune_settings.empty()) throw ArgumentError("--fine-tune needs at least one of on, off");
  if (opt.policies.empty()) throw ArgumentError("--policies needs at least one policy");
  if (opt.horizons.empty() || opt.trajectories.empty()) {
    throw ArgumentError("--horizon and --trajectories need at least one value");
  }
  EpisodeConfig base;
  base.n_trials = opt.trials;
  base.n_init = opt.n_init;
  base.fine_tune_lr = opt.fine_tune_lr;
  base.planner.n_particles = opt.particles;

  std::vector<Method> methods;
  for (const auto& name : opt.policies) {
    const Policy policy = ParsePolicy(name);
    EpisodeConfig cfg = base;
    cfg.policy = policy;
    if (policy == Policy::kRandom) {
      cfg.fine_tune_steps = 0;
      methods.push_back({"random", cfg});
      continue;
    }
    for (bool tune : tune_settings) {
      cfg.fine_tune_steps = tune ? opt.fine_tune_steps : 0;
      const std::string suffix = tune ? "-ft" : "-vanilla";
      if (policy == Policy::kGreedy) {
        methods.push_back({name + suffix, cfg});
        continue;
      }
      for (int h : opt.horizons) {
        for (int k : opt.trajectories) {
          cfg.planner.horizon = h;
          cfg.planner.n_trajectories = k;
          methods.push_back({name + "-h" + std::to_string(h) + "-k" + std::to_string(k) + suffix, cfg});
        }
      }
    }
  }
  std::sort(methods.begin(), methods.end(), [](const Method& a, const Method& b) { return a.label < b.label; });
  methods.erase(std::unique(methods.begin(), methods.end(),
                            [](const Method& a, const Method& b) { return a.label == b.label; }),
                methods.end());
  return methods;
}

int RunEpisodes(const Common& common, const EpisodeOptions& opt, const std::string& command,
                std::ostream& out) {
  if (opt.checkpoint.empty()) throw ArgumentError("checkpoint required (pass --checkpoint)");
  const fs::path outdir(common.outdir);
  const MetaDataset md = ReadMetaDataset(Resolve(opt.data, outdir / "metadataset.json"));
  const Ensemble ensemble = ReadEnsembleCheckpoint(opt.checkpoint);
  if (ensemble.arch().config_dim != md.grid.dim()) {
    throw ShapeError("checkpoint expects config dim " + std::to_string(ensemble.arch().config_dim) +
                     ", dataset has " + std::to_string(md.grid.dim()));
  }
  SplitKind split;
  if (opt.split == "test") {
    split = SplitKind::kTest;
  } else if (opt.split == "valid") {
    split = SplitKind::kValid;
  } else if (opt.split == "train") {
    split = SplitKind::kTrain;
  } else {
    throw ArgumentError("--split must be train, valid or test");
  }
  if (opt.seeds < 1) throw ArgumentError("--seeds must be >= 1");
  const std::vector<Method> methods = ExpandMethods(opt);
  for (const auto& m : methods) m.cfg.Validate(md.grid.size());
  const auto& task_ids = md.split_ids(split);
  if (task_ids.empty()) throw ContractError("the " + opt.split + " split has no tasks");

  struct Job {
    const Method* method;
    std::string task;
    int seed;
  };
  std::vector<Job> jobs;
  for (const auto& m : methods) {
    for (const auto& t : task_ids) {
      for (int s = 0; s < opt.seeds; ++s) jobs.push_back({&m, t, s});
    }
  }

  const fs::path trace_dir = outdir / "traces";
  const fs::path episode_dir = trace_dir / "episodes" / command;
  EnsureDir(episode_dir);
  std::vector<EpisodeTrace> traces(jobs.size());
  std::mutex log_mutex;
  std::atomic<std::size_t> done{0};
  ParallelFor(jobs.size(), common.jobs, [&](std::size_t i) {
    const Job& job = jobs[i];
    EpisodeConfig cfg = job.method->cfg;
    // Shared by all methods so that they start from the same initial points.
    cfg.seed = DeriveSeed(common.seed, "episode-" + job.task + "-" + std::to_string(job.seed));
    EpisodeTrace tr = RunEpisode(ensemble, md.task(job.task), md.grid, cfg);
    tr.method = job.method->label;
    tr.seed = static_cast<std::uint64_t>(job.seed);
    const EpisodeTrace one[] = {tr};
    WriteTraceCsv(one, episode_dir / (tr.method + "__" + tr.task_id + "__s" + std::to_string(job.seed) + ".csv"),
                  opt.timing);
    traces[i] = std::move(tr);
    const std::size_t n = ++done;
    if (n % 25 == 0 || n == jobs.size()) {
      std::lock_guard<std::mutex> lock(log_mutex);
      out << "episodes " << n << "/" << jobs.size() << "\n";
    }
  });

  std::sort(traces.begin(), traces.end(), [](const EpisodeTrace& a, const EpisodeTrace& b) {
    return std::tie(a.method, a.task_id, a.seed) < std::tie(b.method, b.task_id, b.seed);
  });
  const fs::path merged = trace_dir / (command + ".csv");
  WriteTraceCsv(traces, merged, opt.timing);
  out << "wrote " << merged.string() << " (" << methods.size() << " methods, " << task_ids.size()
      << " tasks, " << opt.seeds << " seeds)\n";
  return 0;
}

int MakeReport(const Common& common, const ReportOptions& opt, std::ostream& out) {
  const fs::path outdir(common.outdir);
  std::vector<std::string> files = opt.traces;
  if (files.empty()) {
    const fs::path run = outdir / "traces" / "run.csv";
    const fs::path ablate = outdir / "traces" / "ablate.csv";
    if (fs::exists(run)) {
      files.push_back(run.string());
    } else if (fs::exists(ablate)) {
      files.push_back(ablate.string());
    } else {
      throw IncompleteDesignError("no trace files found under " + (outdir / "traces").string());
    }
  }
  std::vector<EpisodeTrace> traces;
  for (const auto& f : files) {
    auto part = ReadTraceCsv(f);
    traces.insert(traces.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  const Report report = AggregateReport(traces, {}, opt.checkpoints);
  const fs::path dir = Resolve(opt.report_dir, outdir / "report");
  WriteReport(report, dir);
  out << "method";
  for (int t : report.checkpoints) out << "\tregret@" << t << "\trank@" << t;
  out << "\n";
  for (std::size_t m = 0; m < report.methods.size(); ++m) {
    out << report.methods[m];
    for (std::size_t c = 0; c < report.checkpoints.size(); ++c) {
      out << '\t' << report.regret_table.mean[m][c] << '\t' << report.rank_table.mean[m][c];
    }
    out << "\n";
  }
  out << "wrote " << dir.string() << " (" << report.cells << " task/seed cells)\n";
  return 0;
}

const std::vector<std::string>& Commands() {
  static const std::vector<std::string> names{"gen-data", "meta-train", "run", "ablate", "report"};
  return names;
}

}  // namespace

int EditDistance(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Model-based hyperparameter optimization with meta-learned surrogates", "lhpo"};
  app.require_subcommand(1);

  Common common;
  GenOptions gen;
  TrainOptions train;
  EpisodeOptions run;
  run.horizons = {3};
  run.trajectories = {1000};
  run.fine_tune = {"on"};
  EpisodeOptions ablate;
  ablate.horizons = {1, 3, 5};
  ablate.trajectories = {100, 1000};
  ablate.fine_tune = {"on", "off"};
  ReportOptions report;

  std::map<std::string, OptionSet> sets;
  auto make = [&](const std::string& name, const std::string& desc) -> OptionSet& {
    CLI::App* sub = app.add_subcommand(name, desc);
    auto& set = sets.emplace(name, OptionSet(sub)).first->second;
    AddCommon(set, common, "");
    return set;
  };

  {
    OptionSet& s = make("gen-data", "Generate a synthetic meta-dataset");
    s.Add("tasks", gen.tasks, "Number of tasks");
    s.Add("grid", gen.grid, "Configurations per task");
    s.Add("dim", gen.dim, "Hyperparameter dimension");
    s.Add("family", gen.family, "quadratic-bowl, mixture-of-gaussians or rastrigin-like");
    s.Add("noise", gen.noise, "Response noise standard deviation");
    s.Add("n-valid", gen.n_valid, "Validation tasks (-1: 10%)");
    s.Add("n-test", gen.n_test, "Test tasks (-1: 20%)");
    s.Add("out", gen.out, "Output path (default <outdir>/metadataset.json)");
  }
  {
    OptionSet& s = make("meta-train", "Meta-train the surrogate ensemble");
    MetaTrainConfig& c = train.train;
    s.Add("data", train.data, "Meta-dataset (default <outdir>/metadataset.json)");
    s.Add("members", train.members, "Ensemble size");
    s.Add("task-batch", c.task_batch_size, "Tasks per outer iteration");
    s.Add("minibatch", c.minibatch_size, "Quadruples per inner step");
    s.Add("inner-steps", c.inner_steps, "Inner adaptation steps");
    s.Add("inner-lr", c.inner_lr, "Inner learning rate");
    s.Add("inner-optimizer", train.inner_optimizer, "adam or sgd");
    s.Add("outer-lr", c.outer_lr, "Outer step size");
    s.Add("t-min", c.t_min, "Smallest history length");
    s.Add("t-max", c.t_max, "Largest history length (clamped to N-1)");
    s.Add("max-iters", c.max_outer_iters, "Outer iteration budget");
    s.Add("eval-every", c.eval_every, "Outer iterations between validations");
    s.Add("patience", c.patience, "Validations without improvement before stopping");
    s.Add("valid-quadruples", c.valid_quadruples, "Quadruples per validation");
  }
  auto episode_options = [&](OptionSet& s, EpisodeOptions& e) {
    s.Add("data", e.data, "Meta-dataset (default <outdir>/metadataset.json)");
    s.Add("checkpoint", e.checkpoint, "Ensemble checkpoint");
    s.Add("policies", e.policies, "Comma list of lookahead_mpc, mpc, greedy, random");
    s.Add("horizon", e.horizons, "Comma list of planning horizons");
    s.Add("trajectories", e.trajectories, "Comma list of trajectory counts");
    s.Add("fine-tune", e.fine_tune, "Comma list of on, off");
    s.Add("particles", e.particles, "Particles per trajectory");
    s.Add("trials", e.trials, "Planned trials per episode");
    s.Add("n-init", e.n_init, "Initial random evaluations");
    s.Add("fine-tune-steps", e.fine_tune_steps, "Adam steps per fine-tuning call");
    s.Add("fine-tune-lr", e.fine_tune_lr, "Fine-tuning learning rate");
    s.Add("seeds", e.seeds, "Seeds per task");
    s.Add("split", e.split, "Tasks to run on: train, valid or test");
    s.Flag("timing", e.timing, "Record wall-clock ms in traces");
  };
  episode_options(make("run", "Run HPO episodes on held-out tasks"), run);
  episode_options(make("ablate", "Run the horizon x trajectories x fine-tuning grid"), ablate);
  {
    OptionSet& s = make("report", "Aggregate traces into rank and regret tables");
    s.Add("traces", report.traces, "Trace CSVs (default <outdir>/traces/run.csv, else ablate.csv)");
    s.Add("checkpoints", report.checkpoints, "Comma list of trials to tabulate");
    s.Add("report-dir", report.report_dir, "Output directory (default <outdir>/report)");
  }

  std::vector<std::string> tokens = args;
  std::string command;
  try {
    if (!tokens.empty() && tokens[0].rfind("-", 0) != 0) {
      command = tokens[0];
      if (sets.find(command) == sets.end()) {
        std::string msg = "unknown command '" + command + "'";
        const std::string hint = Suggest(command, Commands());
        if (!hint.empty()) msg += " (did you mean '" + hint + "'?)";
        throw ConfigError(msg);
      }
      std::vector<std::string> rest(tokens.begin() + 1, tokens.end());
      const bool help = std::find(rest.begin(), rest.end(), "--help") != rest.end() ||
                        std::find(rest.begin(), rest.end(), "-h") != rest.end();
      if (!help) {
        const OptionSet& set = sets.at(command);
        CheckFlags(rest, set);
        const std::string config_path = FindConfigPath(rest);
        if (!config_path.empty()) MergeConfigFile(config_path, command, set, rest);
      }
      tokens.assign(1, command);
      tokens.insert(tokens.end(), rest.begin(), rest.end());
    }
    std::vector<std::string> reversed(tokens.rbegin(), tokens.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help(command.empty() ? "" : command);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "lhpo: error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "lhpo: error: " << e.what() << "\n";
    return 2;
  }

  try {
    const OptionSet& set = sets.at(command);
    if (set.app()->get_option("--seed")->count() == 0) {
      if (const char* env = std::getenv("LHPO_SEED"); env != nullptr && *env != '\0') {
        try {
          std::size_t used = 0;
          common.seed = std::stoull(env, &used);
          if (env[used] != '\0') throw std::invalid_argument(env);
        } catch (const std::exception&) {
          throw ConfigError(std::string("LHPO_SEED is not an unsigned integer: ") + env);
        }
      }
    }
    WriteManifest(common, command, set);
    if (command == "gen-data") return GenData(common, gen, out);
    if (command == "meta-train") return MetaTrain(common, train, out);
    if (command == "run") return RunEpisodes(common, run, "run", out);
    if (command == "ablate") return RunEpisodes(common, ablate, "ablate", out);
    return MakeReport(common, report, out);
  } catch (const std::exception& e) {
    err << "lhpo: error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lhpo
