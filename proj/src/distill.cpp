// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#include "ptloss/distill.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ptloss/error.hpp"
#include "ptloss/rng.hpp"

namespace ptloss {
namespace {

std::vector<ProbVector> proxies_of(const ProxyBatch& batch) {
  std::vector<ProbVector> out;
  out.reserve(batch.solutions.size());
  for (const auto& s : batch.solutions) out.push_back(s.proxy);
  return out;
}

io::Json method_config(const MethodParams& params, const PerturbationConfig& coefficients) {
  io::Json doc;
  doc["method"] = to_string(params.method);
  switch (params.method) {
    case DistillMethod::temperature: doc["temperature"] = params.temperature; break;
    case DistillMethod::label_smoothing: doc["delta"] = params.delta; break;
    case DistillMethod::focal: doc["gamma"] = params.gamma; break;
    case DistillMethod::pt:
      doc["coefficients"] = io::to_json(coefficients);
      doc["searched"] = !params.coefficients.has_value();
      break;
    case DistillMethod::kl:
    case DistillMethod::onehot: break;
  }
  return doc;
}

}  // namespace

std::string to_string(DistillMethod method) {
  switch (method) {
    case DistillMethod::kl: return "kl";
    case DistillMethod::pt: return "pt";
    case DistillMethod::temperature: return "temperature";
    case DistillMethod::label_smoothing: return "label_smoothing";
    case DistillMethod::focal: return "focal";
    case DistillMethod::onehot: return "onehot";
  }
  return "unknown";
}

DistillMethod parse_distill_method(const std::string& name) {
  if (name == "kl") return DistillMethod::kl;
  if (name == "pt") return DistillMethod::pt;
  if (name == "temp" || name == "temperature") return DistillMethod::temperature;
  if (name == "ls" || name == "label_smoothing") return DistillMethod::label_smoothing;
  if (name == "focal") return DistillMethod::focal;
  if (name == "onehot") return DistillMethod::onehot;
  throw InvalidInput(fmt::format("unknown distillation method '{}'", name));
}

std::vector<std::size_t> layer_dims_for(const LabeledDataset& data, std::span<const std::size_t> hidden) {
  std::vector<std::size_t> dims;
  dims.push_back(static_cast<std::size_t>(data.train.inputs.cols()));
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(data.num_classes);
  return dims;
}

TeacherResult train_teacher(const LabeledDataset& data, std::span<const std::size_t> hidden,
                            const TrainConfig& config) {
  if (data.train.size() == 0) throw InvalidInput("teacher training needs a nonempty train split");
  const auto dims = layer_dims_for(data, hidden);
  MlpModel model = init_mlp(dims, derive_seed(config.seed, "teacher-init"));
  const auto targets = data.train.one_hot(data.num_classes);
  TrainResult trained = train(std::move(model), data.train.inputs, targets, LossFunction::onehot(), config);

  TeacherResult out;
  out.model = std::move(trained.model);
  out.history = std::move(trained.history);
  out.validation_accuracy = accuracy(out.model, data.validation.inputs, data.validation.labels);
  out.test_accuracy = accuracy(out.model, data.test.inputs, data.test.labels);
  return out;
}

LossFunction loss_for(const MethodParams& params, const PerturbationConfig& coefficients) {
  switch (params.method) {
    case DistillMethod::kl: return LossFunction::kl();
    case DistillMethod::onehot: return LossFunction::onehot();
    case DistillMethod::pt: return LossFunction::pt(coefficients);
    case DistillMethod::temperature: return LossFunction::temperature(params.temperature);
    case DistillMethod::label_smoothing: return LossFunction::label_smoothing(params.delta);
    case DistillMethod::focal: return LossFunction::focal(params.gamma);
  }
  throw InvalidInput("unknown distillation method");
}

DistillationReport distill_student(const MlpModel& teacher, const GaussianMixtureSpec& spec,
                                   const LabeledDataset& data, const MethodParams& params,
                                   const TrainConfig& config, std::span<const std::size_t> hidden) {
  if (teacher.input_dim() != static_cast<std::size_t>(data.train.inputs.cols()) ||
      teacher.output_dim() != data.num_classes) {
    throw InvalidInput("teacher dimensions do not match the dataset");
  }
  if (data.train.size() == 0 || data.validation.size() == 0) {
    throw InvalidInput("distillation needs nonempty train and validation splits");
  }

  DistillationReport report;
  report.method = params.method;
  report.seeds.data = spec.seed;
  report.seeds.teacher_init = teacher.seed;
  report.seeds.training = config.seed;
  report.seeds.search = params.search.seed;
  report.seeds.student_init = derive_seed(config.seed, "student-init");

  const auto teacher_val = predict_probs(teacher, data.validation.inputs);
  const auto labels_val = data.validation.one_hot(data.num_classes);
  const auto truth_val = true_posteriors(spec, data.validation.inputs);
  report.teacher_metrics.vs_truth = risk_gap_terms(teacher_val, truth_val);
  report.teacher_metrics.vs_labels = risk_gap_terms(teacher_val, labels_val);

  PerturbationConfig coefficients;
  if (params.method == DistillMethod::pt) {
    if (params.coefficients) {
      coefficients = *params.coefficients;
      coefficients.check_classes(data.num_classes);
    } else {
      try {
        const SearchResult search = search_coefficients(teacher_val, labels_val, params.search, params.solver);
        coefficients = search.best;
        report.validation_score = search.score;
        report.baseline_score = search.baseline_score;
      } catch (const SearchFailure& e) {
        report.failed = true;
        report.diagnostics = fmt::format("{}: {}", e.what(), e.diagnostics());
        report.chosen_config = method_config(params, coefficients);
        return report;
      }
    }
    const ProxyBatch batch = solve_proxy_batch(teacher_val, coefficients, params.solver);
    const auto proxies = proxies_of(batch);
    report.proxy_vs_truth = risk_gap_terms(proxies, truth_val);
    if (!report.validation_score) report.validation_score = quality_score(proxies, labels_val);
  }
  report.chosen_config = method_config(params, coefficients);

  // Teacher outputs on the train inputs are computed once and frozen.
  const std::vector<ProbVector> targets = params.method == DistillMethod::onehot
                                              ? data.train.one_hot(data.num_classes)
                                              : predict_probs(teacher, data.train.inputs);
  MlpModel student = init_mlp(layer_dims_for(data, hidden), report.seeds.student_init);
  TrainResult trained = train(std::move(student), data.train.inputs, targets, loss_for(params, coefficients), config);
  report.history = std::move(trained.history);
  report.student_test_accuracy = accuracy(trained.model, data.test.inputs, data.test.labels);
  report.student_validation_accuracy = accuracy(trained.model, data.validation.inputs, data.validation.labels);
  return report;
}

std::vector<SweepPoint> sweep_proxy_teachers(const MlpModel& teacher, const GaussianMixtureSpec& spec,
                                             const LabeledDataset& data, std::span<const PerturbationConfig> configs,
                                             const TrainConfig& config, const SolverConfig& solver,
                                             std::span<const std::size_t> hidden) {
  if (configs.empty()) throw InvalidInput("sweep needs at least one configuration");
  std::vector<SweepPoint> points;
  points.reserve(configs.size());
  for (const PerturbationConfig& cfg : configs) {
    MethodParams params;
    params.method = DistillMethod::pt;
    params.coefficients = cfg;
    params.solver = solver;
    const DistillationReport report = distill_student(teacher, spec, data, params, config, hidden);
    points.push_back(SweepPoint{cfg, *report.proxy_vs_truth, report.student_test_accuracy});
  }
  return points;
}

std::vector<PerturbationConfig> trajectory_configs(const SearchResult& search, std::size_t count) {
  std::vector<const TrialRecord*> accepted;
  for (const auto& t : search.trials) {
    if (t.score && !(t.trial == 0 && t.order > 1)) accepted.push_back(&t);
  }
  if (accepted.empty() || count == 0) return {};
  std::stable_sort(accepted.begin(), accepted.end(),
                   [](const TrialRecord* a, const TrialRecord* b) { return a->score->total < b->score->total; });
  std::vector<PerturbationConfig> out;
  const std::size_t n = std::min(count, accepted.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t index = n == 1 ? 0 : i * (accepted.size() - 1) / (n - 1);
    out.push_back(accepted[index]->config);
  }
  return out;
}

io::Json to_json(const RiskGapTerms& terms) {
  return {{"l2_distance_mean", terms.l2_distance_mean},
          {"entropy_sq_mean", terms.entropy_sq_mean},
          {"tvd_mean", terms.tvd_mean}};
}

io::Json to_json(const QualityScore& score) {
  return {{"total", score.total}, {"distance_term", score.distance_term}, {"entropy_term", score.entropy_term}};
}

io::Json to_json(const DistillationReport& report) {
  io::Json doc;
  doc["method"] = to_string(report.method);
  doc["failed"] = report.failed;
  if (report.failed) doc["diagnostics"] = report.diagnostics;
  doc["student_test_accuracy"] = report.student_test_accuracy;
  doc["student_validation_accuracy"] = report.student_validation_accuracy;
  doc["teacher_metrics"] = {{"vs_truth", to_json(report.teacher_metrics.vs_truth)},
                            {"vs_labels", to_json(report.teacher_metrics.vs_labels)}};
  doc["proxy_vs_truth"] = report.proxy_vs_truth ? to_json(*report.proxy_vs_truth) : io::Json(nullptr);
  doc["validation_score"] = report.validation_score ? to_json(*report.validation_score) : io::Json(nullptr);
  doc["baseline_score"] = report.baseline_score ? to_json(*report.baseline_score) : io::Json(nullptr);
  doc["chosen_config"] = report.chosen_config;
  doc["seeds"] = {{"data", report.seeds.data},
                  {"teacher_init", report.seeds.teacher_init},
                  {"student_init", report.seeds.student_init},
                  {"training", report.seeds.training},
                  {"search", report.seeds.search}};
  io::Json history = io::Json::array();
  for (const auto& e : report.history) history.push_back({{"mean_loss", e.mean_loss}, {"accuracy", e.accuracy}});
  doc["history"] = std::move(history);
  return doc;
}

std::string report_csv_header() {
  return "method,failed,student_test_accuracy,student_validation_accuracy,teacher_l2_truth,teacher_tvd_truth,"
         "proxy_l2_truth,proxy_tvd_truth,validation_score,training_seed,search_seed";
}

std::string report_csv_row(const DistillationReport& r) {
  const auto opt = [](const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); };
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{}", to_string(r.method), r.failed ? 1 : 0,
                     io::format_double(r.student_test_accuracy), io::format_double(r.student_validation_accuracy),
                     io::format_double(r.teacher_metrics.vs_truth.l2_distance_mean),
                     io::format_double(r.teacher_metrics.vs_truth.tvd_mean),
                     opt(r.proxy_vs_truth ? std::optional<double>(r.proxy_vs_truth->l2_distance_mean) : std::nullopt),
                     opt(r.proxy_vs_truth ? std::optional<double>(r.proxy_vs_truth->tvd_mean) : std::nullopt),
                     opt(r.validation_score ? std::optional<double>(r.validation_score->total) : std::nullopt),
                     r.seeds.training, r.seeds.search);
}

}  // namespace ptloss
