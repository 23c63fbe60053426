// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ptloss/core.hpp"
#include "ptloss/losses.hpp"

namespace ptloss {

struct SolverConfig {
  double tolerance = 1e-8;
  int max_iterations = 100;
  double damping_init = 1e-3;

  void validate() const;
};

struct ProxySolution {
  ProbVector proxy;
  /// Converged logits (zero mean); usable as a warm start.
  LogitVector logits;
  /// Euclidean norm of the objective gradient in logit space.
  double residual_norm;
  int iterations;
  bool converged;
};

/// Objective g(q) = KL(teacher || q) + sum_c teacher_c sum_m eps_{c,m} (1 - q_c)^m
/// with q = softmax(z), together with its gradient and Hessian in z.
class ProxyObjective {
 public:
  ProxyObjective(const ProbVector& teacher, const PerturbationConfig& cfg);

  double value(std::span<const double> logits) const;
  std::vector<double> gradient(std::span<const double> logits) const;
  /// Row-major C x C.
  std::vector<double> hessian(std::span<const double> logits) const;

  std::size_t classes() const noexcept { return teacher_.size(); }

 private:
  struct Terms {
    std::vector<double> q, h, dh;
  };
  Terms terms(std::span<const double> logits) const;

  ProbVector teacher_;
  PerturbationConfig cfg_;
};

/// Finds the proxy teacher closest to `teacher` whose KL-distilled student
/// matches the PT-distilled one: a stationary point of ProxyObjective found
/// by Levenberg-Marquardt damped Newton steps in logit space, starting from
/// log(teacher) unless `start` is given.
ProxySolution solve_proxy_example(const ProbVector& teacher, const PerturbationConfig& cfg,
                                  const SolverConfig& solver = {},
                                  const std::optional<LogitVector>& start = std::nullopt);

struct ProxyBatch {
  std::vector<ProxySolution> solutions;
  double converged_fraction = 0.0;
};

/// Solves each example independently. A divergent example is reported with
/// converged = false and the teacher as its proxy; the rest are unaffected.
ProxyBatch solve_proxy_batch(std::span<const ProbVector> teachers, const PerturbationConfig& cfg,
                             const SolverConfig& solver = {});

}  // namespace ptloss
