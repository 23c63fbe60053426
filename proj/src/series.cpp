// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#include "ptloss/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ptloss/core.hpp"
#include "ptloss/error.hpp"

namespace ptloss {
namespace {

void check_domain(double x) {
  if (!(x > 0.0 && x <= 1.0)) {
    throw InvalidInput(fmt::format("log series argument must lie in (0, 1], got {}", x));
  }
}

void check_order(std::size_t order) {
  if (order < 1) throw InvalidInput("log series order must be at least 1");
}

double tail_bound(double x, std::size_t order) {
  const double next = static_cast<double>(order + 1);
  return std::pow(1.0 - x, next) / (next * x);
}

}  // namespace

TruncatedLogSeries::TruncatedLogSeries(std::size_t order, std::optional<std::vector<double>> perturbations)
    : order_(order), perturbations_(std::move(perturbations)) {
  check_order(order_);
  if (perturbations_ && perturbations_->size() != order_) {
    throw InvalidInput(fmt::format("expected {} perturbations, got {}", order_, perturbations_->size()));
  }
}

double TruncatedLogSeries::operator()(double x) const {
  check_domain(x);
  const double q = 1.0 - std::max(x, kProbabilityFloor);
  double acc = 0.0;
  for (std::size_t m = order_; m >= 1; --m) {
    double coeff = 1.0 / static_cast<double>(m);
    if (perturbations_) coeff += (*perturbations_)[m - 1];
    acc = coeff + q * acc;
  }
  return -q * acc;
}

double maclaurin_log(double x, std::size_t order) {
  check_order(order);
  return TruncatedLogSeries(order)(x);
}

double truncation_bound(double x, std::size_t order) {
  check_domain(x);
  check_order(order);
  const double tail = tail_bound(x, order);
  // Rounding allowance so the bound also covers the computed difference:
  // Horner over same-signed terms errs by at most gamma_{2M+2} |S|, and ln x
  // by one ulp.
  const double u = std::numeric_limits<double>::epsilon() / 2.0;
  const double n = 2.0 * static_cast<double>(order + 1);
  const double gamma = n * u / (1.0 - n * u);
  return tail + gamma * std::abs(maclaurin_log(x, order)) + u * std::abs(std::log(x));
}

std::size_t required_order(double x, double tolerance, std::size_t max_order) {
  check_domain(x);
  if (!(tolerance > 0.0)) throw InvalidInput("tolerance must be positive");
  for (std::size_t m = 1; m <= max_order; ++m) {
    if (tail_bound(x, m) <= tolerance) return m;
  }
  throw ConfigError(fmt::format("no order up to {} reaches tolerance {} at x = {}", max_order, tolerance, x));
}

}  // namespace ptloss
