// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#pragma once

#include <cstddef>
#include <vector>

#include "ptloss/core.hpp"
#include "ptloss/losses.hpp"
#include "ptloss/rng.hpp"

namespace testing {

inline std::vector<double> as_vector(const ptloss::ProbVector& p) { return {p.begin(), p.end()}; }

/// Entries drawn from [lo, hi] then normalized.
inline ptloss::ProbVector random_probs(ptloss::Rng& rng, std::size_t classes, double lo = 0.01, double hi = 1.0) {
  std::vector<double> w(classes);
  for (double& v : w) v = rng.uniform(lo, hi);
  return ptloss::ProbVector::normalized(w);
}

inline std::vector<double> random_logits(ptloss::Rng& rng, std::size_t classes, double scale = 3.0) {
  std::vector<double> z(classes);
  for (double& v : z) v = rng.uniform(-scale, scale);
  return z;
}

inline std::vector<std::vector<double>> random_eps(ptloss::Rng& rng, std::size_t classes, std::size_t order,
                                                   double bound) {
  std::vector<std::vector<double>> eps(classes, std::vector<double>(order));
  for (auto& row : eps)
    for (double& v : row) v = rng.uniform(-bound, bound);
  return eps;
}

}  // namespace testing
