// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ptloss/data.hpp"
#include "ptloss/io.hpp"
#include "ptloss/losses.hpp"
#include "ptloss/nn.hpp"
#include "ptloss/proxy.hpp"
#include "ptloss/selection.hpp"

namespace ptloss {

enum class DistillMethod { kl, pt, temperature, label_smoothing, focal, onehot };

std::string to_string(DistillMethod method);
/// Accepts kl, pt, temp/temperature, ls/label_smoothing, focal, onehot.
DistillMethod parse_distill_method(const std::string& name);

struct MethodParams {
  DistillMethod method = DistillMethod::kl;
  double temperature = 2.0;
  double delta = 0.1;
  double gamma = 2.0;
  /// pt only: fixed coefficients; when empty the coefficient search runs.
  std::optional<PerturbationConfig> coefficients;
  SearchSpec search;
  SolverConfig solver;
};

struct TeacherDiagnostics {
  RiskGapTerms vs_truth;   // against the closed-form posterior
  RiskGapTerms vs_labels;  // against one-hot labels
};

struct SeedRecord {
  std::uint64_t data = 0;
  std::uint64_t teacher_init = 0;
  std::uint64_t student_init = 0;
  std::uint64_t training = 0;
  std::uint64_t search = 0;
};

/// Evidence for one distillation run. Teacher and proxy diagnostics are
/// computed on the validation split.
struct DistillationReport {
  DistillMethod method = DistillMethod::kl;
  double student_test_accuracy = 0.0;
  double student_validation_accuracy = 0.0;
  TeacherDiagnostics teacher_metrics;
  /// pt only: the proxy teacher induced by the chosen coefficients.
  std::optional<RiskGapTerms> proxy_vs_truth;
  std::optional<QualityScore> validation_score;
  std::optional<QualityScore> baseline_score;
  io::Json chosen_config;
  SeedRecord seeds;
  std::vector<EpochStats> history;
  bool failed = false;
  std::string diagnostics;
};

struct TeacherResult {
  MlpModel model;
  double validation_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::vector<EpochStats> history;
};

/// Default hidden sizes of the synthetic experiment.
inline const std::vector<std::size_t> kDefaultHidden{128, 128};

std::vector<std::size_t> layer_dims_for(const LabeledDataset& data, std::span<const std::size_t> hidden);

/// One-hot cross-entropy training on the train split. The model is
/// initialized from derive_seed(config.seed, "teacher-init").
TeacherResult train_teacher(const LabeledDataset& data, std::span<const std::size_t> hidden,
                            const TrainConfig& config);

LossFunction loss_for(const MethodParams& params, const PerturbationConfig& coefficients);

/// Distills a fresh student from the teacher's frozen outputs on the train
/// inputs. For pt without fixed coefficients, the coefficient search runs on
/// the validation split first. The student is initialized from
/// derive_seed(config.seed, "student-init").
DistillationReport distill_student(const MlpModel& teacher, const GaussianMixtureSpec& spec,
                                   const LabeledDataset& data, const MethodParams& params,
                                   const TrainConfig& config, std::span<const std::size_t> hidden = kDefaultHidden);

struct SweepPoint {
  PerturbationConfig config;
  RiskGapTerms proxy_vs_truth;
  double student_test_accuracy = 0.0;
};

/// Distills one student per configuration, pairing the proxy teacher's
/// distance to the true posterior (validation split) with the student's
/// test accuracy. Order is preserved.
std::vector<SweepPoint> sweep_proxy_teachers(const MlpModel& teacher, const GaussianMixtureSpec& spec,
                                             const LabeledDataset& data, std::span<const PerturbationConfig> configs,
                                             const TrainConfig& config, const SolverConfig& solver = {},
                                             std::span<const std::size_t> hidden = kDefaultHidden);

/// `count` accepted candidates from a search, spread evenly over the range
/// of their quality scores (best and worst included).
std::vector<PerturbationConfig> trajectory_configs(const SearchResult& search, std::size_t count);

io::Json to_json(const RiskGapTerms& terms);
io::Json to_json(const QualityScore& score);
io::Json to_json(const DistillationReport& report);
/// Header and row for flat CSV aggregation.
std::string report_csv_header();
std::string report_csv_row(const DistillationReport& report);

}  // namespace ptloss
