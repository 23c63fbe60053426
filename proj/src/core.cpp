// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#include "ptloss/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "ptloss/error.hpp"

namespace ptloss {

ProbVector::ProbVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) {
    throw InvalidInput(fmt::format("probability vector needs at least 2 classes, got {}", values_.size()));
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < values_.size(); ++c) {
    const double v = values_[c];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidInput(fmt::format("probability entry {} = {} is outside [0, 1]", c, v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw InvalidInput(fmt::format("probabilities sum to {:.17g}, not 1", sum));
  }
}

ProbVector ProbVector::normalized(std::vector<double> weights) {
  double sum = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidInput("normalization weights must be finite and nonnegative");
    }
    sum += w;
  }
  if (!(sum > 0.0)) throw InvalidInput("normalization weights sum to zero");
  for (double& w : weights) w /= sum;
  return ProbVector(std::move(weights));
}

ProbVector ProbVector::uniform(std::size_t classes) {
  return ProbVector(std::vector<double>(classes, 1.0 / static_cast<double>(classes)));
}

ProbVector ProbVector::one_hot(std::size_t label, std::size_t classes) {
  if (label >= classes) {
    throw InvalidInput(fmt::format("label {} out of range for {} classes", label, classes));
  }
  std::vector<double> values(classes, 0.0);
  values[label] = 1.0;
  return ProbVector(std::move(values));
}

std::size_t ProbVector::argmax() const {
  return static_cast<std::size_t>(std::max_element(values_.begin(), values_.end()) - values_.begin());
}

std::optional<std::size_t> ProbVector::hot_index() const {
  std::optional<std::size_t> hot;
  for (std::size_t c = 0; c < values_.size(); ++c) {
    if (values_[c] == 1.0 && !hot) {
      hot = c;
    } else if (values_[c] != 0.0) {
      return std::nullopt;
    }
  }
  return hot;
}

LogitVector::LogitVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw InvalidInput("logit vector is empty");
  for (std::size_t c = 0; c < values_.size(); ++c) {
    if (!std::isfinite(values_[c])) {
      throw InvalidInput(fmt::format("logit entry {} is not finite", c));
    }
  }
}

ProbVector softmax(std::span<const double> logits) {
  if (logits.size() < 2) throw InvalidInput("softmax needs at least 2 logits");
  for (const double z : logits) {
    if (!std::isfinite(z)) throw InvalidInput("softmax input is not finite");
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    out[c] = std::exp(logits[c] - peak);
    sum += out[c];
  }
  for (double& v : out) v /= sum;
  return ProbVector(std::move(out));
}

ProbVector softmax(const LogitVector& logits) { return softmax(logits.values()); }

double entropy(const ProbVector& p) {
  double h = 0.0;
  for (const double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double clamped_log(double p) { return std::log(std::max(p, kProbabilityFloor)); }

LogitVector logits_of(const ProbVector& p) {
  std::vector<double> z(p.size());
  std::transform(p.begin(), p.end(), z.begin(), clamped_log);
  return LogitVector(std::move(z));
}

}  // namespace ptloss
