// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ptloss {

/// Lower clamp applied to every probability before it enters a logarithm.
inline constexpr double kProbabilityFloor = 1e-12;

/// Absolute tolerance on the sum of a probability vector.
inline constexpr double kSimplexTolerance = 1e-9;

/// A point on the C-class probability simplex (C >= 2).
class ProbVector {
 public:
  /// Validates and takes ownership. Throws InvalidInput when an entry lies
  /// outside [0, 1], the sum is off by more than kSimplexTolerance, or C < 2.
  explicit ProbVector(std::vector<double> values);

  /// Divides nonnegative weights by their sum.
  static ProbVector normalized(std::vector<double> weights);
  static ProbVector uniform(std::size_t classes);
  static ProbVector one_hot(std::size_t label, std::size_t classes);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t c) const { return values_[c]; }
  std::span<const double> values() const noexcept { return values_; }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  std::size_t argmax() const;

  /// Index of the hot class when this vector is exactly one-hot.
  std::optional<std::size_t> hot_index() const;

  friend bool operator==(const ProbVector&, const ProbVector&) = default;

 private:
  std::vector<double> values_;
};

/// Unnormalized log-odds; every entry finite.
class LogitVector {
 public:
  explicit LogitVector(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t c) const { return values_[c]; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

/// Max-subtracted softmax; throws InvalidInput on non-finite input.
ProbVector softmax(const LogitVector& logits);
ProbVector softmax(std::span<const double> logits);

/// Shannon entropy in nats with 0 log 0 = 0.
double entropy(const ProbVector& p);

/// ln(max(p, kProbabilityFloor)).
double clamped_log(double p);

/// Logits whose softmax reproduces `p` (entries clamped before the log).
LogitVector logits_of(const ProbVector& p);

}  // namespace ptloss
