// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ptloss/core.hpp"

namespace ptloss {

/// Perturbation order M and the coefficients eps[c][m-1] added to the 1/m
/// Maclaurin coefficients of -log p_c. With tie_classes a single row is
/// shared by all classes. Order 0 means "no perturbation" and matches any C.
class PerturbationConfig {
 public:
  PerturbationConfig() = default;

  /// `rows` is C rows of M coefficients (or one row when tie_classes).
  PerturbationConfig(std::vector<std::vector<double>> rows, bool tie_classes);

  static PerturbationConfig zero(std::size_t classes, std::size_t order, bool tie_classes = false);
  static PerturbationConfig tied(std::vector<double> row);

  std::size_t order() const noexcept { return order_; }
  bool tie_classes() const noexcept { return tie_classes_; }
  const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }

  /// eps_{c,m} with m in [1, order].
  double coefficient(std::size_t c, std::size_t m) const { return row(c)[m - 1]; }
  std::span<const double> row(std::size_t c) const {
    return tie_classes_ ? std::span<const double>(rows_.front()) : std::span<const double>(rows_[c]);
  }

  bool is_zero() const;

  /// Throws InvalidInput unless the coefficient shape fits `classes`.
  void check_classes(std::size_t classes) const;

  friend bool operator==(const PerturbationConfig&, const PerturbationConfig&) = default;

 private:
  std::vector<std::vector<double>> rows_;
  std::size_t order_ = 0;
  bool tie_classes_ = false;
};

struct LossEvaluation {
  double value = 0.0;
  /// d loss / d student logits.
  std::optional<std::vector<double>> gradient;
};

double kl_loss(const ProbVector& teacher, const ProbVector& student);

/// KL(teacher || student) + sum_c teacher_c sum_m eps_{c,m} (1 - student_c)^m.
double pt_loss(const ProbVector& teacher, const ProbVector& student, const PerturbationConfig& cfg);

LossEvaluation pt_loss_grad(const ProbVector& teacher, const LogitVector& student_logits,
                            const PerturbationConfig& cfg);

/// Teacher and student softmax outputs both at temperature tau.
ProbVector temperature_probs(std::span<const double> logits, double tau);
double temperature_kl_loss(const LogitVector& teacher_logits, const LogitVector& student_logits, double tau);

/// (1 - delta) * teacher + delta / C.
ProbVector smooth_teacher(const ProbVector& teacher, double delta);
double smoothed_kl_loss(const ProbVector& teacher, const ProbVector& student, double delta);

double focal_kd_loss(const ProbVector& teacher, const ProbVector& student, double gamma);

/// Chain rule through softmax: maps d loss / d probabilities to d loss / d logits.
std::vector<double> softmax_backward(std::span<const double> probs, std::span<const double> dloss_dprobs);

/// The per-example training losses, each with its gradient in student logits.
class LossFunction {
 public:
  enum class Kind { onehot, kl, pt, temperature, label_smoothing, focal };

  static LossFunction onehot() { return LossFunction(Kind::onehot); }
  static LossFunction kl() { return LossFunction(Kind::kl); }
  static LossFunction pt(PerturbationConfig cfg);
  static LossFunction temperature(double tau);
  static LossFunction label_smoothing(double delta);
  static LossFunction focal(double gamma);

  Kind kind() const noexcept { return kind_; }
  double parameter() const noexcept { return parameter_; }
  const PerturbationConfig& config() const noexcept { return config_; }

  LossEvaluation evaluate(const ProbVector& target, std::span<const double> student_logits,
                          bool with_gradient = true) const;

 private:
  explicit LossFunction(Kind kind) : kind_(kind) {}

  Kind kind_;
  double parameter_ = 0.0;
  PerturbationConfig config_;
};

std::string to_string(LossFunction::Kind kind);

}  // namespace ptloss
