// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#include "ptloss/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ptloss/data.hpp"
#include "ptloss/distill.hpp"
#include "ptloss/equivalence.hpp"
#include "ptloss/error.hpp"
#include "ptloss/io.hpp"
#include "ptloss/nn.hpp"
#include "ptloss/proxy.hpp"
#include "ptloss/rng.hpp"
#include "ptloss/selection.hpp"

namespace ptloss::cli {
namespace {

namespace fs = std::filesystem;
using io::Json;

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  if (text.empty()) return out;
  for (const auto& cell : io::split_csv_line(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, fmt::format("'{}' is not a comma-separated list of numbers", text));
    }
  }
  return out;
}

std::vector<std::size_t> parse_dims(const std::string& text, const std::string& flag) {
  std::vector<std::size_t> dims;
  for (const double v : parse_list(text, flag)) {
    if (!(v >= 1.0) || v != static_cast<double>(static_cast<std::size_t>(v))) {
      throw CLI::ValidationError(flag, fmt::format("'{}' must list positive integers", text));
    }
    dims.push_back(static_cast<std::size_t>(v));
  }
  return dims;
}

std::pair<double, double> parse_range(const std::string& text, const std::string& flag) {
  const auto v = parse_list(text, flag);
  if (v.size() != 2) throw CLI::ValidationError(flag, fmt::format("'{}' must be two numbers lo,hi", text));
  return {v[0], v[1]};
}

Json history_json(std::span<const EpochStats> history) {
  Json out = Json::array();
  for (const auto& e : history) out.push_back({{"mean_loss", e.mean_loss}, {"accuracy", e.accuracy}});
  return out;
}

/// Accepts a bare coefficient document, a search-coeffs result or a distill
/// report.
PerturbationConfig load_coefficients(const fs::path& path) {
  const Json doc = io::read_json(path);
  try {
    if (doc.contains("coefficients")) return io::config_from_json(doc.at("coefficients"));
    if (doc.contains("chosen_config")) return io::config_from_json(doc.at("chosen_config").at("coefficients"));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(fmt::format("'{}': {}", path.string(), e.what()));
  }
  return io::config_from_json(doc);
}

std::vector<ProbVector> labels_one_hot(std::span<const std::size_t> labels, std::size_t classes) {
  std::vector<ProbVector> out;
  out.reserve(labels.size());
  for (const std::size_t y : labels) {
    if (y >= classes) throw SchemaError(fmt::format("label {} out of range for {} classes", y, classes));
    out.push_back(ProbVector::one_hot(y, classes));
  }
  return out;
}

/// Files read and written by one invocation, recorded in the manifest.
struct Artifacts {
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  Json seeds = Json::object();
  fs::path manifest;
  Json result;
};

void add_dataset_inputs(Artifacts& a, const fs::path& dir) {
  for (const char* name : {"spec.json", "train.csv", "validation.csv", "test.csv"}) a.inputs.push_back(dir / name);
}

/// A subcommand plus the typed variables behind its flags. Each flag is
/// registered once so the resolved configuration can be serialized.
class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& description)
      : app_(parent.add_subcommand(name, description)) {
    app_->add_option("--config", config_placeholder_,
                     "JSON file of flag values (or a manifest); explicit flags override it");
    app_->add_option("--manifest", manifest_, "Manifest path (default derived from the primary output)");
  }

  template <typename T>
  CLI::Option* option(const std::string& name, T& var, const std::string& description) {
    getters_.emplace_back(name, [&var] { return Json(var); });
    return app_->add_option("--" + name, var, description);
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& description) {
    getters_.emplace_back(name, [&var] { return Json(var); });
    return app_->add_flag("--" + name, var, description);
  }

  Json config() const {
    Json out = Json::object();
    for (const auto& [name, get] : getters_) out[name] = get();
    return out;
  }

  CLI::App* app() const { return app_; }
  const std::string& manifest() const { return manifest_; }

  std::function<Artifacts()> action;

 private:
  CLI::App* app_;
  std::string config_placeholder_;
  std::string manifest_;
  std::vector<std::pair<std::string, std::function<Json()>>> getters_;
};

/// Turns a config document into `--key=value` tokens.
std::vector<std::string> config_tokens(const fs::path& path) {
  Json doc = io::read_json(path);
  if (doc.is_object() && doc.contains("command") && doc.contains("config")) doc = doc.at("config");
  if (!doc.is_object()) throw SchemaError(fmt::format("'{}': configuration must be a JSON object", path.string()));
  std::vector<std::string> tokens;
  for (const auto& [key, value] : doc.items()) {
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
      if (text.empty()) continue;  // an unset optional path
    } else if (value.is_boolean()) {
      text = value.get<bool>() ? "true" : "false";
    } else if (value.is_number()) {
      text = value.dump();
    } else {
      throw SchemaError(fmt::format("'{}': value of '{}' must be a string, number or boolean", path.string(), key));
    }
    tokens.push_back(fmt::format("--{}={}", key, text));
  }
  return tokens;
}

/// Moves `--config <file>` out of the argument list and splices the file's
/// values in right after the subcommand name, so later flags win.
std::vector<std::string> expand_config(std::span<const std::string> args) {
  std::vector<std::string> rest;
  std::vector<std::string> injected;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config", 1, 0);
      path = args[++i];
    } else if (args[i].starts_with("--config=")) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
      continue;
    }
    if (!fs::is_regular_file(path)) throw CLI::ValidationError("--config", fmt::format("file not found: {}", path));
    const auto tokens = config_tokens(path);
    injected.insert(injected.end(), tokens.begin(), tokens.end());
  }
  if (injected.empty() || rest.empty()) return rest;
  std::vector<std::string> out{rest.front()};
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

struct TrainingFlags {
  double lr = 5e-4;
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  std::string hidden = "128,128";
  bool full_batch_history = false;

  void add(Command& cmd) {
    cmd.option("lr", lr, "SGD learning rate")->capture_default_str();
    cmd.option("batch-size", batch_size, "Minibatch size")->capture_default_str();
    cmd.option("epochs", epochs, "Training epochs")->capture_default_str();
    cmd.option("hidden", hidden, "Comma-separated hidden layer widths")->capture_default_str();
    cmd.flag("full-batch-history", full_batch_history, "Record full-pass loss and accuracy each epoch");
  }

  TrainConfig config(std::uint64_t seed) const {
    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.batch_size = batch_size;
    cfg.epochs = epochs;
    cfg.seed = seed;
    cfg.full_batch_history = full_batch_history;
    cfg.validate();
    return cfg;
  }
};

struct SolverFlags {
  double tol = 1e-8;
  int max_iter = 100;

  void add(Command& cmd) {
    cmd.option("tol", tol, "Proxy solver gradient-norm tolerance")->capture_default_str();
    cmd.option("max-iter", max_iter, "Proxy solver iteration cap")->capture_default_str();
  }

  SolverConfig config() const {
    SolverConfig cfg;
    cfg.tolerance = tol;
    cfg.max_iterations = max_iter;
    cfg.validate();
    return cfg;
  }
};

struct SearchFlags {
  std::size_t trials = 100;
  std::string range = "-1,10";
  bool tie_classes = false;
  double min_converged = 0.99;

  void add(Command& cmd) {
    cmd.option("trials", trials, "Random trials per order")->capture_default_str();
    cmd.option("range", range, "Coefficient sampling range lo,hi")->capture_default_str();
    cmd.flag("tie-classes", tie_classes, "Share one coefficient row across classes");
    cmd.option("min-converged", min_converged, "Minimum proxy convergence fraction per trial")->capture_default_str();
  }

  SearchSpec spec(std::size_t max_order, std::uint64_t seed) const {
    SearchSpec s;
    s.max_order = max_order;
    s.trials_per_order = trials;
    std::tie(s.range_low, s.range_high) = parse_range(range, "--range");
    s.tie_classes = tie_classes;
    s.seed = seed;
    s.min_converged_fraction = min_converged;
    s.validate();
    return s;
  }
};

Json search_json(const SearchResult& r, std::size_t trajectory) {
  Json doc;
  doc["order"] = r.best.order();
  doc["coefficients"] = io::to_json(r.best);
  doc["best_order"] = r.best_order;
  doc["best_trial"] = r.best_trial;
  doc["score"] = to_json(r.score);
  doc["baseline_score"] = to_json(r.baseline_score);
  doc["discarded"] = r.discarded;
  double min_frac = 1.0;
  double sum_frac = 0.0;
  Json trials = Json::array();
  for (const auto& t : r.trials) {
    min_frac = std::min(min_frac, t.converged_fraction);
    sum_frac += t.converged_fraction;
    trials.push_back({{"order", t.order},
                      {"trial", t.trial},
                      {"score", t.score ? Json(t.score->total) : Json(nullptr)},
                      {"converged_fraction", t.converged_fraction},
                      {"best_so_far", t.best_so_far}});
  }
  doc["convergence"] = {{"trials_evaluated", r.trials.size()},
                        {"min_fraction", min_frac},
                        {"mean_fraction", r.trials.empty() ? 0.0 : sum_frac / static_cast<double>(r.trials.size())}};
  doc["trials"] = std::move(trials);
  Json traj = Json::array();
  for (const auto& cfg : trajectory_configs(r, trajectory)) traj.push_back(io::to_json(cfg));
  doc["trajectory"] = std::move(traj);
  return doc;
}

std::string default_manifest(const std::string& primary) { return primary + ".manifest.json"; }

void write_csv(const std::string& path, const std::string& header, std::span<const std::string> rows) {
  std::string text = header + "\n";
  for (const auto& r : rows) text += r + "\n";
  io::write_text(path, text);
}

void register_commands(CLI::App& app, std::vector<std::unique_ptr<Command>>& commands) {
  // generate-data
  {
    auto cmd = std::make_unique<Command>(app, "generate-data", "Sample a Gaussian-mixture dataset");
    struct Flags {
      std::size_t classes = 3, dim = 30, n = 10000;
      double sigma = 2.0;
      std::string split = "0.9,0.05,0.05", out_dir;
      std::uint64_t seed = 0;
    };
    auto f = std::make_shared<Flags>();
    cmd->option("classes", f->classes, "Number of classes")->capture_default_str();
    cmd->option("dim", f->dim, "Input dimension")->capture_default_str();
    cmd->option("sigma", f->sigma, "Per-coordinate standard deviation")->capture_default_str();
    cmd->option("n", f->n, "Total examples")->capture_default_str();
    cmd->option("split", f->split, "train,validation,test ratios")->capture_default_str();
    cmd->option("seed", f->seed, "Root seed")->required();
    cmd->option("out-dir", f->out_dir, "Output directory")->required();
    Command* self = cmd.get();
    cmd->action = [f, self] {
      const auto ratio = parse_list(f->split, "--split");
      if (ratio.size() != 3) throw CLI::ValidationError("--split", "expected three ratios");
      const auto spec = GaussianMixtureSpec::sample(f->classes, f->dim, f->sigma, f->seed);
      const auto data = generate(spec, f->n, {ratio[0], ratio[1], ratio[2]});
      write_dataset(f->out_dir, spec, data);
      Artifacts a;
      add_dataset_inputs(a, f->out_dir);
      a.outputs = std::move(a.inputs);
      a.inputs.clear();
      a.seeds = {{"seed", f->seed},
                 {"means", derive_seed(f->seed, "means")},
                 {"samples", derive_seed(f->seed, "samples")}};
      a.manifest = self->manifest().empty() ? fs::path(f->out_dir) / "manifest.json" : fs::path(self->manifest());
      a.result = {{"out_dir", f->out_dir},
                  {"splits",
                   {{"train", data.train.size()}, {"validation", data.validation.size()}, {"test", data.test.size()}}}};
      return a;
    };
    commands.push_back(std::move(cmd));
  }

  // train-teacher
  {
    auto cmd = std::make_unique<Command>(app, "train-teacher", "Train a teacher with one-hot cross-entropy");
    struct Flags {
      std::string data, out, csv;
      std::uint64_t seed = 0;
      TrainingFlags train;
    };
    auto f = std::make_shared<Flags>();
    cmd->option("data", f->data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    cmd->option("seed", f->seed, "Training seed")->required();
    cmd->option("out", f->out, "Model JSON output")->required();
    cmd->option("csv", f->csv, "Optional CSV summary output");
    f->train.add(*cmd);
    Command* self = cmd.get();
    cmd->action = [f, self] {
      const StoredDataset stored = read_dataset(f->data);
      const auto hidden = parse_dims(f->train.hidden, "--hidden");
      const TrainConfig cfg = f->train.config(f->seed);
      const TeacherResult teacher = train_teacher(stored.data, hidden, cfg);
      io::write_json(f->out, to_json(teacher.model));
      Artifacts a;
      add_dataset_inputs(a, f->data);
      a.outputs.push_back(f->out);
      if (!f->csv.empty()) {
        const std::string row = fmt::format("{},{},{}", io::format_double(teacher.validation_accuracy),
                                            io::format_double(teacher.test_accuracy), f->seed);
        write_csv(f->csv, "validation_accuracy,test_accuracy,seed", std::span(&row, 1));
        a.outputs.push_back(f->csv);
      }
      a.seeds = {{"seed", f->seed},
                 {"teacher_init", teacher.model.seed},
                 {"data", stored.spec.seed}};
      a.manifest = self->manifest().empty() ? default_manifest(f->out) : self->manifest();
      a.result = {{"layer_dims", teacher.model.layer_dims},
                  {"validation_accuracy", teacher.validation_accuracy},
                  {"test_accuracy", teacher.test_accuracy},
                  {"history", history_json(teacher.history)}};
      return a;
    };
    commands.push_back(std::move(cmd));
  }

  // distill
  {
    auto cmd = std::make_unique<Command>(app, "distill", "Distill a student from a trained teacher");
    struct Flags {
      std::string data, teacher, method, out, csv, coeffs;
      std::uint64_t seed = 0;
      double temperature = 2.0, delta = 0.1, gamma = 2.0;
      std::size_t max_order = 0;
      TrainingFlags train;
      SearchFlags search;
      SolverFlags solver;
    };
    auto f = std::make_shared<Flags>();
    cmd->option("data", f->data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    cmd->option("teacher", f->teacher, "Teacher model JSON")->required()->check(CLI::ExistingFile);
    cmd->option("method", f->method, "kl | pt | temp | ls | focal | onehot")->required();
    cmd->option("seed", f->seed, "Training and search seed")->required();
    cmd->option("out", f->out, "Report JSON output")->required();
    cmd->option("csv", f->csv, "Optional one-row CSV output");
    cmd->option("temperature", f->temperature, "Temperature for --method temp")->capture_default_str();
    cmd->option("delta", f->delta, "Smoothing for --method ls")->capture_default_str();
    cmd->option("gamma", f->gamma, "Focusing parameter for --method focal")->capture_default_str();
    cmd->option("max-order", f->max_order, "Highest perturbation order searched (--method pt)");
    cmd->option("coeffs", f->coeffs, "Fixed coefficient JSON for --method pt (skips the search)");
    f->train.add(*cmd);
    f->search.add(*cmd);
    f->solver.add(*cmd);
    Command* self = cmd.get();
    cmd->action = [f, self] {
      MethodParams params;
      params.method = parse_distill_method(f->method);
      params.temperature = f->temperature;
      params.delta = f->delta;
      params.gamma = f->gamma;
      params.solver = f->solver.config();
      Artifacts a;
      add_dataset_inputs(a, f->data);
      a.inputs.push_back(f->teacher);
      if (params.method == DistillMethod::pt) {
        if (!f->coeffs.empty()) {
          if (!fs::is_regular_file(f->coeffs)) {
            throw CLI::ValidationError("--coeffs", fmt::format("file not found: {}", f->coeffs));
          }
          params.coefficients = load_coefficients(f->coeffs);
          a.inputs.push_back(f->coeffs);
        } else if (f->max_order == 0) {
          throw CLI::RequiredError("--max-order (required by --method pt without --coeffs)");
        } else {
          params.search = f->search.spec(f->max_order, f->seed);
        }
      }
      const StoredDataset stored = read_dataset(f->data);
      const MlpModel teacher = model_from_json(io::read_json(f->teacher));
      const auto hidden = parse_dims(f->train.hidden, "--hidden");
      const DistillationReport report =
          distill_student(teacher, stored.spec, stored.data, params, f->train.config(f->seed), hidden);
      a.result = to_json(report);
      io::write_json(f->out, a.result);
      a.outputs.push_back(f->out);
      if (!f->csv.empty()) {
        const std::string row = report_csv_row(report);
        write_csv(f->csv, report_csv_header(), std::span(&row, 1));
        a.outputs.push_back(f->csv);
      }
      a.seeds = a.result.at("seeds");
      a.manifest = self->manifest().empty() ? default_manifest(f->out) : self->manifest();
      return a;
    };
    commands.push_back(std::move(cmd));
  }

  // search-coeffs
  {
    auto cmd = std::make_unique<Command>(app, "search-coeffs", "Search perturbation coefficients on validation data");
    struct Flags {
      std::string teacher_probs, labels, out;
      std::size_t max_order = 3, trajectory = 10;
      std::uint64_t seed = 0;
      SearchFlags search;
      SolverFlags solver;
    };
    auto f = std::make_shared<Flags>();
    cmd->option("teacher-probs", f->teacher_probs, "Teacher probabilities CSV")->required()->check(CLI::ExistingFile);
    cmd->option("labels", f->labels, "Labels CSV")->required()->check(CLI::ExistingFile);
    cmd->option("max-order", f->max_order, "Highest perturbation order")->capture_default_str();
    cmd->option("seed", f->seed, "Search seed")->required();
    cmd->option("out", f->out, "Result JSON output")->required();
    cmd->option("trajectory", f->trajectory, "Candidates kept for a later sweep")->capture_default_str();
    f->search.add(*cmd);
    f->solver.add(*cmd);
    Command* self = cmd.get();
    cmd->action = [f, self] {
      const SearchSpec spec = f->search.spec(f->max_order, f->seed);
      const SolverConfig solver = f->solver.config();
      const auto teacher = io::read_probabilities_csv(f->teacher_probs);
      const auto labels = io::read_labels_csv(f->labels);
      if (teacher.empty()) throw SchemaError(fmt::format("'{}' has no rows", f->teacher_probs));
      const auto one_hot = labels_one_hot(labels, teacher.front().size());
      const SearchResult result = search_coefficients(teacher, one_hot, spec, solver);
      Artifacts a;
      a.inputs = {f->teacher_probs, f->labels};
      a.result = search_json(result, f->trajectory);
      io::write_json(f->out, a.result);
      a.outputs.push_back(f->out);
      a.seeds = {{"seed", f->seed}};
      a.manifest = self->manifest().empty() ? default_manifest(f->out) : self->manifest();
      return a;
    };
    commands.push_back(std::move(cmd));
  }

  // solve-proxy
  {
    auto cmd = std::make_unique<Command>(app, "solve-proxy", "Solve the proxy teacher for each example");
    struct Flags {
      std::string teacher_probs, coeffs, out;
      SolverFlags solver;
    };
    auto f = std::make_shared<Flags>();
    cmd->option("teacher-probs", f->teacher_probs, "Teacher probabilities CSV")->required()->check(CLI::ExistingFile);
    cmd->option("coeffs", f->coeffs, "Coefficient JSON")->required()->check(CLI::ExistingFile);
    cmd->option("out", f->out, "Proxy probabilities CSV output")->required();
    f->solver.add(*cmd);
    Command* self = cmd.get();
    cmd->action = [f, self] {
      const SolverConfig solver = f->solver.config();
      const auto teacher = io::read_probabilities_csv(f->teacher_probs);
      const PerturbationConfig cfg = load_coefficients(f->coeffs);
      const ProxyBatch batch = solve_proxy_batch(teacher, cfg, solver);
      std::vector<ProbVector> proxies;
      double max_residual = 0.0;
      double iterations = 0.0;
      for (const auto& s : batch.solutions) {
        proxies.push_back(s.proxy);
        max_residual = std::max(max_residual, s.residual_norm);
        iterations += s.iterations;
      }
      io::write_probabilities_csv(f->out, proxies);
      Artifacts a;
      a.inputs = {f->teacher_probs, f->coeffs};
      a.outputs = {f->out};
      a.manifest = self->manifest().empty() ? default_manifest(f->out) : self->manifest();
      a.result = {{"examples", proxies.size()},
                  {"converged_fraction", batch.converged_fraction},
                  {"max_residual", std::isfinite(max_residual) ? Json(max_residual) : Json("inf")},
                  {"mean_iterations", proxies.empty() ? 0.0 : iterations / static_cast<double>(proxies.size())}};
      return a;
    };
    commands.push_back(std::move(cmd));
  }

  // verify-equivalence
  {
    auto cmd = std::make_unique<Command>(app, "verify-equivalence", "Check PT loss against a classical loss");
    struct Flags {
      std::string method, out;
      double param = 0.0;
      std::size_t order = 200, trials = 100, classes = 2;
      std::uint64_t seed = 0;
    };
    auto f = std::make_shared<Flags>();
    cmd->option("method", f->method, "ls | focal | temperature")->required();
    cmd->option("param", f->param, "delta, gamma or tau")->required();
    cmd->option("order", f->order, "Series order M")->capture_default_str();
    cmd->option("trials", f->trials, "Random teachers")->capture_default_str();
    cmd->option("classes", f->classes, "Number of classes")->capture_default_str();
    cmd->option("seed", f->seed, "Seed")->required();
    cmd->option("out", f->out, "Optional report JSON output");
    Command* self = cmd.get();
    cmd->action = [f, self] {
      EquivalenceOptions opts;
      opts.parameter = f->param;
      opts.order = f->order;
      opts.trials = f->trials;
      opts.classes = f->classes;
      opts.seed = f->seed;
      const auto method = parse_equivalence_method(f->method);
      const EquivalenceReport r = verify_equivalence(method, opts);
      Artifacts a;
      a.result = {{"method", to_string(r.method)},
                  {"max_abs_deviation", r.max_abs_deviation},
                  {"additive_constant", r.additive_constant},
                  {"constant_error", r.constant_error},
                  {"samples_checked", r.samples_checked}};
      a.seeds = {{"seed", f->seed}};
      if (!f->out.empty()) {
        io::write_json(f->out, a.result);
        a.outputs.push_back(f->out);
        a.manifest = self->manifest().empty() ? default_manifest(f->out) : self->manifest();
      }
      return a;
    };
    commands.push_back(std::move(cmd));
  }

  // sweep
  {
    auto cmd = std::make_unique<Command>(app, "sweep", "Distill one student per coefficient configuration");
    struct Flags {
      std::string data, teacher, configs, out, csv;
      std::size_t count = 0;
      std::uint64_t seed = 0;
      TrainingFlags train;
      SolverFlags solver;
    };
    auto f = std::make_shared<Flags>();
    cmd->option("data", f->data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    cmd->option("teacher", f->teacher, "Teacher model JSON")->required()->check(CLI::ExistingFile);
    cmd->option("configs", f->configs, "JSON array of coefficient documents, or a search-coeffs result")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->option("count", f->count, "Use only the first N configurations (0 = all)")->capture_default_str();
    cmd->option("seed", f->seed, "Training seed")->required();
    cmd->option("out", f->out, "Sweep JSON output")->required();
    cmd->option("csv", f->csv, "Optional per-configuration CSV output");
    f->train.add(*cmd);
    f->solver.add(*cmd);
    Command* self = cmd.get();
    cmd->action = [f, self] {
      const Json doc = io::read_json(f->configs);
      const Json list = doc.is_object() && doc.contains("trajectory") ? doc.at("trajectory") : doc;
      if (!list.is_array()) throw SchemaError(fmt::format("'{}': expected an array of configurations", f->configs));
      std::vector<PerturbationConfig> configs;
      for (const auto& item : list) {
        if (f->count > 0 && configs.size() == f->count) break;
        configs.push_back(io::config_from_json(item));
      }
      const StoredDataset stored = read_dataset(f->data);
      const MlpModel teacher = model_from_json(io::read_json(f->teacher));
      const auto hidden = parse_dims(f->train.hidden, "--hidden");
      const auto points = sweep_proxy_teachers(teacher, stored.spec, stored.data, configs,
                                               f->train.config(f->seed), f->solver.config(), hidden);
      Json out_points = Json::array();
      std::vector<double> l2, tvd, acc;
      std::vector<std::string> rows;
      for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        out_points.push_back({{"coefficients", io::to_json(p.config)},
                              {"proxy_vs_truth", to_json(p.proxy_vs_truth)},
                              {"student_test_accuracy", p.student_test_accuracy}});
        l2.push_back(p.proxy_vs_truth.l2_distance_mean);
        tvd.push_back(p.proxy_vs_truth.tvd_mean);
        acc.push_back(p.student_test_accuracy);
        rows.push_back(fmt::format("{},{},{},{}", i, io::format_double(l2.back()), io::format_double(tvd.back()),
                                   io::format_double(acc.back())));
      }
      Artifacts a;
      add_dataset_inputs(a, f->data);
      a.inputs.push_back(f->teacher);
      a.inputs.push_back(f->configs);
      a.result = {{"points", std::move(out_points)}};
      if (points.size() >= 2) {
        a.result["spearman_l2"] = spearman_correlation(l2, acc);
        a.result["spearman_tvd"] = spearman_correlation(tvd, acc);
      }
      io::write_json(f->out, a.result);
      a.outputs.push_back(f->out);
      if (!f->csv.empty()) {
        write_csv(f->csv, "index,proxy_l2_truth,proxy_tvd_truth,student_test_accuracy", rows);
        a.outputs.push_back(f->csv);
      }
      a.seeds = {{"seed", f->seed}, {"student_init", derive_seed(f->seed, "student-init")}};
      a.manifest = self->manifest().empty() ? default_manifest(f->out) : self->manifest();
      return a;
    };
    commands.push_back(std::move(cmd));
  }

  // eval
  {
    auto cmd = std::make_unique<Command>(app, "eval", "Evaluate a model on one dataset split");
    struct Flags {
      std::string model, data, split = "test", probs_out, labels_out;
    };
    auto f = std::make_shared<Flags>();
    cmd->option("model", f->model, "Model JSON")->required()->check(CLI::ExistingFile);
    cmd->option("data", f->data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    cmd->option("split", f->split, "train | validation | test")
        ->capture_default_str()
        ->check(CLI::IsMember({"train", "validation", "test"}));
    cmd->option("probs-out", f->probs_out, "Optional probabilities CSV output");
    cmd->option("labels-out", f->labels_out, "Optional labels CSV output");
    Command* self = cmd.get();
    cmd->action = [f, self] {
      const StoredDataset stored = read_dataset(f->data);
      const MlpModel model = model_from_json(io::read_json(f->model));
      const DataSplit& split = f->split == "train"        ? stored.data.train
                               : f->split == "validation" ? stored.data.validation
                                                          : stored.data.test;
      if (model.input_dim() != stored.spec.dim || model.output_dim() != stored.spec.num_classes) {
        throw InvalidInput("model dimensions do not match the dataset");
      }
      const auto probs = predict_probs(model, split.inputs);
      const auto truth = true_posteriors(stored.spec, split.inputs);
      const auto one_hot = split.one_hot(stored.spec.num_classes);
      Artifacts a;
      add_dataset_inputs(a, f->data);
      a.inputs.push_back(f->model);
      a.result = {{"split", f->split},
                  {"examples", split.size()},
                  {"accuracy", accuracy(model, split.inputs, split.labels)},
                  {"vs_truth", to_json(risk_gap_terms(probs, truth))},
                  {"vs_labels", to_json(risk_gap_terms(probs, one_hot))}};
      if (!f->probs_out.empty()) {
        io::write_probabilities_csv(f->probs_out, probs);
        a.outputs.push_back(f->probs_out);
      }
      if (!f->labels_out.empty()) {
        io::write_labels_csv(f->labels_out, split.labels);
        a.outputs.push_back(f->labels_out);
      }
      if (!a.outputs.empty()) {
        a.manifest = self->manifest().empty() ? default_manifest(a.outputs.front().string()) : self->manifest();
      }
      return a;
    };
    commands.push_back(std::move(cmd));
  }
}

Json digests(std::span<const fs::path> paths) {
  Json out = Json::array();
  for (const auto& p : paths) out.push_back({{"path", p.string()}, {"sha256", io::sha256_file(p)}});
  return out;
}

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

CLI::App* parsed_subcommand(const CLI::App& app) {
  const auto subs = app.get_subcommands();
  return subs.empty() ? nullptr : subs.front();
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app("Perturbed distillation loss toolkit", "ptloss");
  app.set_version_flag("--version", PTLOSS_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::vector<std::unique_ptr<Command>> commands;
  register_commands(app, commands);

  const auto usage_error = [&](const std::string& message) {
    err << "error: usage: " << message << "\n";
    const CLI::App* sub = parsed_subcommand(app);
    err << (sub ? sub->help() : app.help());
    return 2;
  };

  try {
    std::vector<std::string> tokens = expand_config(args);
    std::reverse(tokens.begin(), tokens.end());
    app.parse(tokens);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* sub = parsed_subcommand(app);
    out << (sub ? sub->help() : app.help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << PTLOSS_VERSION << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    return usage_error(e.what());
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << e.what() << "\n";
    return 2;
  }

  const CLI::App* sub = parsed_subcommand(app);
  const auto it = std::find_if(commands.begin(), commands.end(), [&](const auto& c) { return c->app() == sub; });
  Command& cmd = **it;

  try {
    const auto start = std::chrono::steady_clock::now();
    Artifacts a = cmd.action();
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!a.manifest.empty()) {
      Json manifest;
      manifest["command"] = sub->get_name();
      manifest["version"] = PTLOSS_VERSION;
      manifest["config"] = cmd.config();
      manifest["seeds"] = a.seeds;
      manifest["inputs"] = digests(a.inputs);
      manifest["outputs"] = digests(a.outputs);
      manifest["duration_seconds"] = seconds;
      io::write_json(a.manifest, manifest);
      err << "manifest: " << a.manifest.string() << "\n";
    }
    out << a.result.dump(2) << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    return usage_error(e.what());
  } catch (const IoError& e) {
    err << "error: " << e.kind() << ": " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    err << "error: " << e.kind() << ": " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << one_line(e.what()) << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "error: schema: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return 1;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace ptloss::cli
