// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#include "ptloss/proxy.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "ptloss/error.hpp"

namespace ptloss {
namespace {

// Damping beyond which a stalled iterate is abandoned.
constexpr double kMaxDamping = 1e16;

std::vector<double> recentered(std::vector<double> z) {
  double mean = 0.0;
  for (const double v : z) mean += v;
  mean /= static_cast<double>(z.size());
  for (double& v : z) v -= mean;
  return z;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return std::sqrt(s);
}

bool all_finite(const std::vector<double>& v) {
  for (const double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw ConfigError("solver tolerance must be positive");
  if (max_iterations < 1) throw ConfigError("solver max_iterations must be at least 1");
  if (!(damping_init > 0.0)) throw ConfigError("solver damping_init must be positive");
}

ProxyObjective::ProxyObjective(const ProbVector& teacher, const PerturbationConfig& cfg)
    : teacher_(teacher), cfg_(cfg) {
  cfg_.check_classes(teacher_.size());
}

// h_c = d(perturbation)/dq_c and dh_c = d h_c / d q_c.
ProxyObjective::Terms ProxyObjective::terms(std::span<const double> logits) const {
  const std::size_t classes = teacher_.size();
  if (logits.size() != classes) {
    throw InvalidInput(fmt::format("expected {} logits, got {}", classes, logits.size()));
  }
  const ProbVector q = softmax(logits);
  Terms out{std::vector<double>(q.begin(), q.end()), std::vector<double>(classes, 0.0),
            std::vector<double>(classes, 0.0)};
  if (cfg_.order() == 0) return out;
  for (std::size_t c = 0; c < classes; ++c) {
    const auto eps = cfg_.row(c);
    const double r = 1.0 - out.q[c];
    double first = 0.0;
    double second = 0.0;
    for (std::size_t m = eps.size(); m >= 1; --m) {
      const double md = static_cast<double>(m);
      first = md * eps[m - 1] + r * first;
      if (m >= 2) second = md * (md - 1.0) * eps[m - 1] + r * second;
    }
    out.h[c] = -teacher_[c] * first;
    out.dh[c] = teacher_[c] * second;
  }
  return out;
}

double ProxyObjective::value(std::span<const double> logits) const {
  const ProbVector q = softmax(logits);
  return pt_loss(teacher_, q, cfg_);
}

std::vector<double> ProxyObjective::gradient(std::span<const double> logits) const {
  const Terms t = terms(logits);
  const std::size_t classes = t.q.size();
  double w = 0.0;
  for (std::size_t c = 0; c < classes; ++c) w += t.q[c] * t.h[c];
  std::vector<double> g(classes);
  for (std::size_t j = 0; j < classes; ++j) g[j] = t.q[j] - teacher_[j] + t.q[j] * (t.h[j] - w);
  return g;
}

std::vector<double> ProxyObjective::hessian(std::span<const double> logits) const {
  const Terms t = terms(logits);
  const std::size_t n = t.q.size();
  // With J = diag(q) - q q^T, a = h + q * dh and w = q.h:
  //   H = J + diag(q (a - w)) - q q^T (a 1^T + 1 a^T) + (q.a + w) q q^T.
  std::vector<double> a(n);
  double w = 0.0;
  double qa = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    a[c] = t.h[c] + t.q[c] * t.dh[c];
    w += t.q[c] * t.h[c];
  }
  for (std::size_t c = 0; c < n; ++c) qa += t.q[c] * a[c];
  std::vector<double> hess(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      const double qq = t.q[j] * t.q[k];
      double v = -qq * (1.0 + a[j] + a[k] - qa - w);
      if (j == k) v += t.q[j] * (1.0 + a[j] - w);
      hess[j * n + k] = v;
    }
  }
  return hess;
}

ProxySolution solve_proxy_example(const ProbVector& teacher, const PerturbationConfig& cfg,
                                  const SolverConfig& solver, const std::optional<LogitVector>& start) {
  solver.validate();
  const ProxyObjective objective(teacher, cfg);
  const std::size_t n = teacher.size();
  if (start && start->size() != n) {
    throw InvalidInput(fmt::format("start logits have {} entries, expected {}", start->size(), n));
  }

  const LogitVector initial = start ? *start : logits_of(teacher);
  std::vector<double> z(initial.values().begin(), initial.values().end());
  z = recentered(std::move(z));
  std::vector<double> grad = objective.gradient(z);
  double residual = norm(grad);
  double value = objective.value(z);
  double damping = solver.damping_init;
  int iterations = 0;

  // The 1 1^T / n term removes the null direction of the Hessian along the
  // constant-shift vector; gradients are orthogonal to it, so steps are too.
  const Eigen::MatrixXd shift_fix = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));

  while (residual > solver.tolerance && iterations < solver.max_iterations) {
    ++iterations;
    const std::vector<double> hv = objective.hessian(z);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> hessian(
        hv.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const Eigen::Map<const Eigen::VectorXd> g(grad.data(), static_cast<Eigen::Index>(n));

    // Raise the damping until the damped system is positive definite so the
    // step is a descent direction for the objective.
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (;;) {
      Eigen::MatrixXd system = hessian + shift_fix;
      system.diagonal().array() += damping;
      llt.compute(system);
      if (llt.info() == Eigen::Success || damping > kMaxDamping) break;
      damping *= 4.0;
    }
    if (llt.info() != Eigen::Success) break;
    const Eigen::VectorXd step = llt.solve(-g);

    std::vector<double> trial(n);
    for (std::size_t c = 0; c < n; ++c) trial[c] = z[c] + step[static_cast<Eigen::Index>(c)];
    trial = recentered(std::move(trial));
    if (!all_finite(trial)) {
      throw SolverDivergence("proxy solver produced non-finite logits");
    }
    std::vector<double> trial_grad = objective.gradient(trial);
    const double trial_value = objective.value(trial);
    if (!all_finite(trial_grad) || !std::isfinite(trial_value)) {
      throw SolverDivergence("proxy solver produced a non-finite objective or gradient");
    }
    const double trial_residual = norm(trial_grad);
    // Descent on the objective; near the minimum, where values tie to
    // rounding, a smaller gradient decides.
    const double slack = 1e-12 * (1.0 + std::abs(value));
    if (trial_value < value - slack || (trial_value <= value + slack && trial_residual < residual)) {
      z = std::move(trial);
      grad = std::move(trial_grad);
      residual = trial_residual;
      value = trial_value;
      damping *= 0.5;
    } else {
      damping *= 4.0;
      if (damping > kMaxDamping) break;
    }
  }

  LogitVector logits(z);
  ProbVector proxy = softmax(logits);
  return ProxySolution{std::move(proxy), std::move(logits), residual, iterations, residual <= solver.tolerance};
}

ProxyBatch solve_proxy_batch(std::span<const ProbVector> teachers, const PerturbationConfig& cfg,
                             const SolverConfig& solver) {
  if (teachers.empty()) throw InvalidInput("proxy batch is empty");
  const std::size_t classes = teachers.front().size();
  ProxyBatch batch;
  batch.solutions.reserve(teachers.size());
  std::size_t converged = 0;
  for (const ProbVector& teacher : teachers) {
    if (teacher.size() != classes) throw InvalidInput("proxy batch mixes class counts");
    try {
      batch.solutions.push_back(solve_proxy_example(teacher, cfg, solver));
    } catch (const SolverDivergence&) {
      batch.solutions.push_back(ProxySolution{teacher, logits_of(teacher),
                                              std::numeric_limits<double>::infinity(), solver.max_iterations,
                                              false});
    }
    if (batch.solutions.back().converged) ++converged;
  }
  batch.converged_fraction = static_cast<double>(converged) / static_cast<double>(teachers.size());
  return batch;
}

}  // namespace ptloss
