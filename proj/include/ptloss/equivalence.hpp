// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "ptloss/core.hpp"
#include "ptloss/losses.hpp"

namespace ptloss {

enum class EquivalenceMethod { label_smoothing, focal, temperature };

std::string to_string(EquivalenceMethod method);
/// Accepts "ls"/"label_smoothing", "focal", "temperature"/"temp".
EquivalenceMethod parse_equivalence_method(const std::string& name);

/// Coefficients that turn PT loss into label-smoothed KL (up to an additive
/// constant): eps_{c,m} = (delta/C - delta p_c) / (m p_c).
/// Throws DegenerateTeacher when a teacher entry is at the probability floor.
PerturbationConfig ls_coefficients(const ProbVector& teacher, double delta, std::size_t order);

/// Coefficients that turn PT loss into focal KD loss at this student point:
/// eps_{c,m} = ((1 - s_c)^gamma - 1) / m.
PerturbationConfig focal_coefficients(const ProbVector& student, double gamma, std::size_t order);

/// Minimum-norm per-class coefficients that make pt_loss(softmax(teacher),
/// softmax(student)) equal the temperature-scaled KL at this one point.
/// The PT loss is affine in the coefficients, so the fit is a projection.
PerturbationConfig fit_temperature_coefficients(const LogitVector& teacher_logits, const LogitVector& student_logits,
                                                double tau, std::size_t order);

struct EquivalenceOptions {
  double parameter = 0.0;  // delta, gamma or tau
  std::size_t order = 200;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t classes = 2;
  /// Per-class probabilities are drawn from [prob_low, prob_high] then normalized.
  double prob_low = 0.3;
  double prob_high = 0.7;
  /// Series truncation error allowed before the order is rejected.
  double tolerance = 1e-6;
  /// Students drawn per teacher when fitting the additive constant.
  std::size_t students_per_trial = 8;
};

struct EquivalenceReport {
  EquivalenceMethod method = EquivalenceMethod::label_smoothing;
  /// Largest |difference - fitted constant| over all samples.
  double max_abs_deviation = 0.0;
  /// Fitted constant (pt_loss - reference loss) for the first trial's teacher.
  double additive_constant = 0.0;
  /// Largest gap between a fitted constant and its analytic value
  /// (H(smoothed teacher) - H(teacher) for label smoothing, 0 for focal).
  double constant_error = 0.0;
  std::size_t samples_checked = 0;
};

EquivalenceReport verify_equivalence(EquivalenceMethod method, const EquivalenceOptions& options);

}  // namespace ptloss
