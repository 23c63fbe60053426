// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#include "ptloss/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "ptloss/error.hpp"
#include "ptloss/rng.hpp"
#include "ptloss/series.hpp"

namespace ptloss {
namespace {

ProbVector sample_bounded(Rng& rng, std::size_t classes, double lo, double hi) {
  std::vector<double> w(classes);
  for (double& v : w) v = rng.uniform(lo, hi);
  return ProbVector::normalized(std::move(w));
}

// Coefficient magnitude multiplying the truncated tail in each method.
double series_error_scale(EquivalenceMethod method, double parameter) {
  switch (method) {
    case EquivalenceMethod::label_smoothing: return 2.0 * parameter;
    case EquivalenceMethod::focal: return parameter == 0.0 ? 0.0 : 1.0;
    case EquivalenceMethod::temperature: return 0.0;
  }
  return 1.0;
}

void check_options(EquivalenceMethod method, const EquivalenceOptions& o) {
  if (o.trials < 1) throw InvalidInput("equivalence check needs at least one trial");
  if (o.order < 1) throw InvalidInput("equivalence check needs order >= 1");
  if (o.classes < 2) throw InvalidInput("equivalence check needs at least 2 classes");
  if (!(o.prob_low > 0.0 && o.prob_low <= o.prob_high)) throw InvalidInput("invalid probability sampling range");
  if (o.students_per_trial < 1) throw InvalidInput("students_per_trial must be at least 1");
  if (method == EquivalenceMethod::temperature && o.classes != 2) {
    throw ConfigError("the temperature containment check is defined for binary classification only");
  }
  const double scale = series_error_scale(method, o.parameter);
  if (scale == 0.0) return;
  const double floor = o.prob_low / (o.prob_low + static_cast<double>(o.classes - 1) * o.prob_high);
  if (scale * truncation_bound(floor, o.order) > o.tolerance) {
    const std::size_t needed = required_order(floor, o.tolerance / scale);
    throw ConfigError(fmt::format(
        "order {} is too small: truncation error at probability {:.4g} exceeds {:g}; use order >= {}",
        o.order, floor, o.tolerance, needed));
  }
}

}  // namespace

std::string to_string(EquivalenceMethod method) {
  switch (method) {
    case EquivalenceMethod::label_smoothing: return "label_smoothing";
    case EquivalenceMethod::focal: return "focal";
    case EquivalenceMethod::temperature: return "temperature";
  }
  return "unknown";
}

EquivalenceMethod parse_equivalence_method(const std::string& name) {
  if (name == "ls" || name == "label_smoothing") return EquivalenceMethod::label_smoothing;
  if (name == "focal") return EquivalenceMethod::focal;
  if (name == "temperature" || name == "temp") return EquivalenceMethod::temperature;
  throw InvalidInput(fmt::format("unknown equivalence method '{}'", name));
}

PerturbationConfig ls_coefficients(const ProbVector& teacher, double delta, std::size_t order) {
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw InvalidInput(fmt::format("smoothing delta must lie in [0, 1), got {}", delta));
  }
  const std::size_t classes = teacher.size();
  const double share = delta / static_cast<double>(classes);
  std::vector<std::vector<double>> rows(classes, std::vector<double>(order));
  for (std::size_t c = 0; c < classes; ++c) {
    if (teacher[c] <= kProbabilityFloor) {
      throw DegenerateTeacher(fmt::format("teacher probability for class {} is at the floor; "
                                          "label-smoothing coefficients divide by it", c));
    }
    const double shift = share - delta * teacher[c];
    for (std::size_t m = 1; m <= order; ++m) rows[c][m - 1] = shift / (static_cast<double>(m) * teacher[c]);
  }
  return PerturbationConfig(std::move(rows), false);
}

PerturbationConfig focal_coefficients(const ProbVector& student, double gamma, std::size_t order) {
  if (!(gamma >= 0.0)) throw InvalidInput(fmt::format("focal gamma must be nonnegative, got {}", gamma));
  std::vector<std::vector<double>> rows(student.size(), std::vector<double>(order));
  for (std::size_t c = 0; c < student.size(); ++c) {
    const double factor = std::pow(1.0 - student[c], gamma) - 1.0;
    for (std::size_t m = 1; m <= order; ++m) rows[c][m - 1] = factor / static_cast<double>(m);
  }
  return PerturbationConfig(std::move(rows), false);
}

PerturbationConfig fit_temperature_coefficients(const LogitVector& teacher_logits, const LogitVector& student_logits,
                                                double tau, std::size_t order) {
  if (order < 1) throw InvalidInput("temperature fit needs order >= 1");
  const double target = temperature_kl_loss(teacher_logits, student_logits, tau);
  const ProbVector t = softmax(teacher_logits);
  const ProbVector s = softmax(student_logits);
  const std::size_t classes = t.size();

  std::vector<std::vector<double>> basis(classes, std::vector<double>(order));
  double norm_sq = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    double power = 1.0;
    for (std::size_t m = 0; m < order; ++m) {
      power *= 1.0 - s[c];
      basis[c][m] = t[c] * power;
      norm_sq += basis[c][m] * basis[c][m];
    }
  }
  const double gap = target - kl_loss(t, s);
  if (norm_sq == 0.0) {
    if (gap != 0.0) throw SolverDivergence("temperature fit has no degrees of freedom at this point");
    return PerturbationConfig::zero(classes, order);
  }
  for (auto& r : basis) {
    for (double& v : r) v *= gap / norm_sq;
  }
  return PerturbationConfig(std::move(basis), false);
}

EquivalenceReport verify_equivalence(EquivalenceMethod method, const EquivalenceOptions& o) {
  check_options(method, o);
  EquivalenceReport report;
  report.method = method;

  for (std::size_t trial = 0; trial < o.trials; ++trial) {
    Rng rng(derive_seed(o.seed, "equivalence", trial));
    const ProbVector teacher = sample_bounded(rng, o.classes, o.prob_low, o.prob_high);

    if (method == EquivalenceMethod::temperature) {
      const ProbVector student = sample_bounded(rng, o.classes, o.prob_low, o.prob_high);
      const LogitVector zt = logits_of(teacher);
      const LogitVector zs = logits_of(student);
      const PerturbationConfig eps = fit_temperature_coefficients(zt, zs, o.parameter, o.order);
      const double gap = std::abs(pt_loss(teacher, student, eps) - temperature_kl_loss(zt, zs, o.parameter));
      report.max_abs_deviation = std::max(report.max_abs_deviation, gap);
      ++report.samples_checked;
      continue;
    }

    double expected_constant = 0.0;
    PerturbationConfig ls_eps;
    if (method == EquivalenceMethod::label_smoothing) {
      ls_eps = ls_coefficients(teacher, o.parameter, o.order);
      expected_constant = entropy(smooth_teacher(teacher, o.parameter)) - entropy(teacher);
    }

    std::vector<double> diffs;
    diffs.reserve(o.students_per_trial);
    for (std::size_t k = 0; k < o.students_per_trial; ++k) {
      const ProbVector student = sample_bounded(rng, o.classes, o.prob_low, o.prob_high);
      if (method == EquivalenceMethod::label_smoothing) {
        diffs.push_back(pt_loss(teacher, student, ls_eps) - smoothed_kl_loss(teacher, student, o.parameter));
      } else {
        const PerturbationConfig eps = focal_coefficients(student, o.parameter, o.order);
        diffs.push_back(pt_loss(teacher, student, eps) - focal_kd_loss(teacher, student, o.parameter));
      }
    }
    double fitted = 0.0;
    for (const double d : diffs) fitted += d;
    fitted /= static_cast<double>(diffs.size());
    for (const double d : diffs) report.max_abs_deviation = std::max(report.max_abs_deviation, std::abs(d - fitted));
    report.constant_error = std::max(report.constant_error, std::abs(fitted - expected_constant));
    if (trial == 0) report.additive_constant = fitted;
    report.samples_checked += diffs.size();
  }
  return report;
}

}  // namespace ptloss
