// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace ptloss {

/// -sum_{m=1..M} (1/m + eps_m) (1 - x)^m, the order-M truncation of the
/// Maclaurin expansion of ln x with optional perturbations eps_m.
class TruncatedLogSeries {
 public:
  explicit TruncatedLogSeries(std::size_t order, std::optional<std::vector<double>> perturbations = std::nullopt);

  std::size_t order() const noexcept { return order_; }
  const std::optional<std::vector<double>>& perturbations() const noexcept { return perturbations_; }

  /// Horner evaluation, highest order first. x in (0, 1]; values below the
  /// probability floor are raised to it.
  double operator()(double x) const;

 private:
  std::size_t order_;
  std::optional<std::vector<double>> perturbations_;
};

double maclaurin_log(double x, std::size_t order);

/// (1 - x)^{M+1} / ((M + 1) x), which bounds the omitted positive tail by a
/// geometric series, plus a floating-point rounding allowance so the result
/// bounds the computed |ln x - maclaurin_log(x, M)| as well.
double truncation_bound(double x, std::size_t order);

/// Smallest order M whose truncation_bound at x is at most `tolerance`.
std::size_t required_order(double x, double tolerance, std::size_t max_order = 1'000'000);

}  // namespace ptloss
