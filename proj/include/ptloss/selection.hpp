// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ptloss/core.hpp"
#include "ptloss/losses.hpp"
#include "ptloss/proxy.hpp"

namespace ptloss {

/// Validation quality of a proxy teacher:
///   distance_term = (mean_n ||proxy_n - y_n||_2)^2
///   entropy_term  = mean_n (proxy_n^T log proxy_n)^2
struct QualityScore {
  double total = 0.0;
  double distance_term = 0.0;
  double entropy_term = 0.0;
};

/// Throws InvalidInput on a length mismatch or a label that is not one-hot.
QualityScore quality_score(std::span<const ProbVector> proxies, std::span<const ProbVector> labels);

/// Measurable risk-gap terms of a predictor against a reference
/// (one-hot labels or the true posterior), plus total variation distance.
struct RiskGapTerms {
  double l2_distance_mean = 0.0;
  double entropy_sq_mean = 0.0;
  double tvd_mean = 0.0;
};

RiskGapTerms risk_gap_terms(std::span<const ProbVector> model_probs, std::span<const ProbVector> reference);

struct SearchSpec {
  std::size_t max_order = 3;
  std::size_t trials_per_order = 100;
  double range_low = -1.0;
  double range_high = 10.0;
  bool tie_classes = false;
  std::uint64_t seed = 0;
  /// Samples whose proxy batch converges on fewer examples are discarded.
  double min_converged_fraction = 0.99;

  void validate() const;
};

/// One evaluated candidate. Trial 0 of every order is the all-zero
/// (plain KL) configuration; trials 1..N_k are random draws.
struct TrialRecord {
  std::size_t order = 0;
  std::size_t trial = 0;
  PerturbationConfig config;
  std::optional<QualityScore> score;  // empty when discarded
  double converged_fraction = 0.0;
  double best_so_far = 0.0;  // running minimum of accepted totals
};

struct SearchResult {
  PerturbationConfig best;
  QualityScore score;
  std::size_t best_order = 0;
  std::size_t best_trial = 0;
  QualityScore baseline_score;
  std::size_t discarded = 0;
  std::vector<TrialRecord> trials;
};

/// Draws the coefficients of one random trial. Exposed so callers can
/// regenerate any candidate from (seed, order, trial) alone.
PerturbationConfig sample_coefficients(const SearchSpec& spec, std::size_t classes, std::size_t order,
                                       std::size_t trial);

/// Random search over perturbation coefficients minimizing the quality score
/// of the induced proxy teacher. Ties keep the earliest (lowest order, then
/// lowest trial) candidate. Throws SearchFailure when every sample is discarded.
SearchResult search_coefficients(std::span<const ProbVector> teacher_val, std::span<const ProbVector> labels,
                                 const SearchSpec& spec, const SolverConfig& solver = {});

/// Spearman rank correlation with average ranks for ties.
double spearman_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace ptloss
