// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#include "ptloss/losses.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ptloss/error.hpp"

namespace ptloss {
namespace {

void check_same_classes(const ProbVector& a, const ProbVector& b) {
  if (a.size() != b.size()) {
    throw InvalidInput(fmt::format("class count mismatch: {} vs {}", a.size(), b.size()));
  }
}

// sum_{m=1..M} eps_m q^m, Horner form.
double perturbation_series(std::span<const double> eps, double q) {
  double acc = 0.0;
  for (std::size_t m = eps.size(); m >= 1; --m) acc = eps[m - 1] + q * acc;
  return q * acc;
}

// d/dp of sum_m eps_m (1 - p)^m = -sum_m m eps_m q^{m-1}.
double perturbation_series_derivative(std::span<const double> eps, double q) {
  double acc = 0.0;
  for (std::size_t m = eps.size(); m >= 1; --m) acc = static_cast<double>(m) * eps[m - 1] + q * acc;
  return -acc;
}

double perturbation_term(const ProbVector& teacher, const ProbVector& student, const PerturbationConfig& cfg) {
  if (cfg.order() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t c = 0; c < teacher.size(); ++c) {
    total += teacher[c] * perturbation_series(cfg.row(c), 1.0 - student[c]);
  }
  return total;
}

}  // namespace

PerturbationConfig::PerturbationConfig(std::vector<std::vector<double>> rows, bool tie_classes)
    : rows_(std::move(rows)), tie_classes_(tie_classes) {
  if (rows_.empty()) {
    if (tie_classes_) throw InvalidInput("tied perturbation config needs one coefficient row");
    return;
  }
  if (tie_classes_ && rows_.size() != 1) {
    throw InvalidInput(fmt::format("tied perturbation config needs exactly one row, got {}", rows_.size()));
  }
  order_ = rows_.front().size();
  for (const auto& r : rows_) {
    if (r.size() != order_) throw InvalidInput("perturbation coefficient rows have unequal lengths");
    for (const double e : r) {
      if (!std::isfinite(e)) throw InvalidInput("perturbation coefficient is not finite");
    }
  }
  if (order_ == 0) rows_.clear();
}

PerturbationConfig PerturbationConfig::zero(std::size_t classes, std::size_t order, bool tie_classes) {
  if (order == 0) return {};
  const std::size_t n_rows = tie_classes ? 1 : classes;
  return PerturbationConfig(std::vector<std::vector<double>>(n_rows, std::vector<double>(order, 0.0)), tie_classes);
}

PerturbationConfig PerturbationConfig::tied(std::vector<double> row) {
  if (row.empty()) return {};
  return PerturbationConfig({std::move(row)}, true);
}

bool PerturbationConfig::is_zero() const {
  return std::all_of(rows_.begin(), rows_.end(),
                     [](const auto& r) { return std::all_of(r.begin(), r.end(), [](double e) { return e == 0.0; }); });
}

void PerturbationConfig::check_classes(std::size_t classes) const {
  if (order_ == 0 || tie_classes_) return;
  if (rows_.size() != classes) {
    throw InvalidInput(fmt::format("coefficient matrix has {} rows but the data has {} classes", rows_.size(), classes));
  }
}

double kl_loss(const ProbVector& teacher, const ProbVector& student) {
  check_same_classes(teacher, student);
  double total = 0.0;
  for (std::size_t c = 0; c < teacher.size(); ++c) {
    if (teacher[c] > 0.0) total += teacher[c] * (std::log(teacher[c]) - clamped_log(student[c]));
  }
  return total;
}

double pt_loss(const ProbVector& teacher, const ProbVector& student, const PerturbationConfig& cfg) {
  check_same_classes(teacher, student);
  cfg.check_classes(teacher.size());
  return kl_loss(teacher, student) + perturbation_term(teacher, student, cfg);
}

std::vector<double> softmax_backward(std::span<const double> probs, std::span<const double> dloss_dprobs) {
  double weighted = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c) weighted += probs[c] * dloss_dprobs[c];
  std::vector<double> grad(probs.size());
  for (std::size_t j = 0; j < probs.size(); ++j) grad[j] = probs[j] * (dloss_dprobs[j] - weighted);
  return grad;
}

LossEvaluation pt_loss_grad(const ProbVector& teacher, const LogitVector& student_logits,
                            const PerturbationConfig& cfg) {
  if (teacher.size() != student_logits.size()) {
    throw InvalidInput(fmt::format("class count mismatch: {} vs {}", teacher.size(), student_logits.size()));
  }
  cfg.check_classes(teacher.size());
  const ProbVector student = softmax(student_logits);
  const std::size_t classes = teacher.size();

  LossEvaluation out;
  out.value = kl_loss(teacher, student) + perturbation_term(teacher, student, cfg);

  std::vector<double> grad(classes);
  for (std::size_t j = 0; j < classes; ++j) grad[j] = student[j] - teacher[j];
  if (cfg.order() > 0) {
    std::vector<double> dperturb(classes);
    for (std::size_t c = 0; c < classes; ++c) {
      dperturb[c] = teacher[c] * perturbation_series_derivative(cfg.row(c), 1.0 - student[c]);
    }
    const auto chained = softmax_backward(student.values(), dperturb);
    for (std::size_t j = 0; j < classes; ++j) grad[j] += chained[j];
  }
  out.gradient = std::move(grad);
  return out;
}

ProbVector temperature_probs(std::span<const double> logits, double tau) {
  if (!(tau > 0.0)) throw InvalidInput(fmt::format("temperature must be positive, got {}", tau));
  std::vector<double> scaled(logits.begin(), logits.end());
  for (double& z : scaled) z /= tau;
  return softmax(scaled);
}

double temperature_kl_loss(const LogitVector& teacher_logits, const LogitVector& student_logits, double tau) {
  return kl_loss(temperature_probs(teacher_logits.values(), tau), temperature_probs(student_logits.values(), tau));
}

ProbVector smooth_teacher(const ProbVector& teacher, double delta) {
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw InvalidInput(fmt::format("smoothing delta must lie in [0, 1), got {}", delta));
  }
  const double share = delta / static_cast<double>(teacher.size());
  std::vector<double> smoothed(teacher.size());
  for (std::size_t c = 0; c < teacher.size(); ++c) smoothed[c] = (1.0 - delta) * teacher[c] + share;
  return ProbVector(std::move(smoothed));
}

double smoothed_kl_loss(const ProbVector& teacher, const ProbVector& student, double delta) {
  return kl_loss(smooth_teacher(teacher, delta), student);
}

double focal_kd_loss(const ProbVector& teacher, const ProbVector& student, double gamma) {
  if (!(gamma >= 0.0)) throw InvalidInput(fmt::format("focal gamma must be nonnegative, got {}", gamma));
  check_same_classes(teacher, student);
  double total = -entropy(teacher);
  for (std::size_t c = 0; c < teacher.size(); ++c) {
    if (teacher[c] > 0.0) total += teacher[c] * std::pow(1.0 - student[c], gamma) * -clamped_log(student[c]);
  }
  return total;
}

LossFunction LossFunction::pt(PerturbationConfig cfg) {
  LossFunction f(Kind::pt);
  f.config_ = std::move(cfg);
  return f;
}

LossFunction LossFunction::temperature(double tau) {
  if (!(tau > 0.0)) throw InvalidInput(fmt::format("temperature must be positive, got {}", tau));
  LossFunction f(Kind::temperature);
  f.parameter_ = tau;
  return f;
}

LossFunction LossFunction::label_smoothing(double delta) {
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw InvalidInput(fmt::format("smoothing delta must lie in [0, 1), got {}", delta));
  }
  LossFunction f(Kind::label_smoothing);
  f.parameter_ = delta;
  return f;
}

LossFunction LossFunction::focal(double gamma) {
  if (!(gamma >= 0.0)) throw InvalidInput(fmt::format("focal gamma must be nonnegative, got {}", gamma));
  LossFunction f(Kind::focal);
  f.parameter_ = gamma;
  return f;
}

LossEvaluation LossFunction::evaluate(const ProbVector& target, std::span<const double> student_logits,
                                      bool with_gradient) const {
  if (target.size() != student_logits.size()) {
    throw InvalidInput(fmt::format("class count mismatch: {} vs {}", target.size(), student_logits.size()));
  }
  const std::size_t classes = target.size();
  LossEvaluation out;

  switch (kind_) {
    case Kind::onehot:
    case Kind::kl:
    case Kind::pt: {
      const LogitVector z(std::vector<double>(student_logits.begin(), student_logits.end()));
      out = pt_loss_grad(target, z, kind_ == Kind::pt ? config_ : PerturbationConfig{});
      break;
    }
    case Kind::temperature: {
      const double tau = parameter_;
      const LogitVector teacher_z = logits_of(target);
      const ProbVector t = temperature_probs(teacher_z.values(), tau);
      const ProbVector s = temperature_probs(student_logits, tau);
      out.value = kl_loss(t, s);
      std::vector<double> grad(classes);
      for (std::size_t j = 0; j < classes; ++j) grad[j] = (s[j] - t[j]) / tau;
      out.gradient = std::move(grad);
      break;
    }
    case Kind::label_smoothing: {
      const ProbVector t = smooth_teacher(target, parameter_);
      const ProbVector s = softmax(student_logits);
      out.value = kl_loss(t, s);
      std::vector<double> grad(classes);
      for (std::size_t j = 0; j < classes; ++j) grad[j] = s[j] - t[j];
      out.gradient = std::move(grad);
      break;
    }
    case Kind::focal: {
      const double gamma = parameter_;
      const ProbVector s = softmax(student_logits);
      out.value = focal_kd_loss(target, s, gamma);
      std::vector<double> dprobs(classes, 0.0);
      for (std::size_t c = 0; c < classes; ++c) {
        if (target[c] == 0.0) continue;
        const double p = std::max(s[c], kProbabilityFloor);
        const double q = std::max(1.0 - s[c], kProbabilityFloor);
        double d = -std::pow(q, gamma) / p;
        if (gamma != 0.0) d += gamma * std::pow(q, gamma - 1.0) * std::log(p);
        dprobs[c] = target[c] * d;
      }
      out.gradient = softmax_backward(s.values(), dprobs);
      break;
    }
  }
  if (!with_gradient) out.gradient.reset();
  return out;
}

std::string to_string(LossFunction::Kind kind) {
  switch (kind) {
    case LossFunction::Kind::onehot: return "onehot";
    case LossFunction::Kind::kl: return "kl";
    case LossFunction::Kind::pt: return "pt";
    case LossFunction::Kind::temperature: return "temperature";
    case LossFunction::Kind::label_smoothing: return "label_smoothing";
    case LossFunction::Kind::focal: return "focal";
  }
  return "unknown";
}

}  // namespace ptloss
