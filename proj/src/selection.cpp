// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#include "ptloss/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "ptloss/error.hpp"
#include "ptloss/rng.hpp"

namespace ptloss {
namespace {

double neg_entropy(const ProbVector& p) { return -entropy(p); }

double l2_distance(const ProbVector& a, const ProbVector& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
  return std::sqrt(s);
}

void check_paired(std::span<const ProbVector> a, std::span<const ProbVector> b) {
  if (a.size() != b.size()) throw InvalidInput(fmt::format("length mismatch: {} vs {}", a.size(), b.size()));
  if (a.empty()) throw InvalidInput("empty input");
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (a[n].size() != b[n].size()) throw InvalidInput(fmt::format("class count mismatch at example {}", n));
  }
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

QualityScore quality_score(std::span<const ProbVector> proxies, std::span<const ProbVector> labels) {
  check_paired(proxies, labels);
  double distance = 0.0;
  double entropy_sq = 0.0;
  for (std::size_t n = 0; n < proxies.size(); ++n) {
    if (!labels[n].hot_index()) throw InvalidInput(fmt::format("label {} is not one-hot", n));
    distance += l2_distance(proxies[n], labels[n]);
    const double e = neg_entropy(proxies[n]);
    entropy_sq += e * e;
  }
  const double count = static_cast<double>(proxies.size());
  QualityScore q;
  q.distance_term = (distance / count) * (distance / count);
  q.entropy_term = entropy_sq / count;
  q.total = q.distance_term + q.entropy_term;
  return q;
}

RiskGapTerms risk_gap_terms(std::span<const ProbVector> model_probs, std::span<const ProbVector> reference) {
  check_paired(model_probs, reference);
  RiskGapTerms out;
  for (std::size_t n = 0; n < model_probs.size(); ++n) {
    out.l2_distance_mean += l2_distance(model_probs[n], reference[n]);
    const double e = neg_entropy(model_probs[n]);
    out.entropy_sq_mean += e * e;
    double l1 = 0.0;
    for (std::size_t c = 0; c < model_probs[n].size(); ++c) l1 += std::abs(model_probs[n][c] - reference[n][c]);
    out.tvd_mean += 0.5 * l1;
  }
  const double count = static_cast<double>(model_probs.size());
  out.l2_distance_mean /= count;
  out.entropy_sq_mean /= count;
  out.tvd_mean /= count;
  return out;
}

void SearchSpec::validate() const {
  if (max_order < 1) throw ConfigError("search max_order must be at least 1");
  if (trials_per_order < 1) throw ConfigError("search trials_per_order must be at least 1");
  if (!(range_low < range_high)) {
    throw ConfigError(fmt::format("coefficient range [{}, {}] is empty", range_low, range_high));
  }
  if (!(min_converged_fraction >= 0.0 && min_converged_fraction <= 1.0)) {
    throw ConfigError(fmt::format("min_converged_fraction must lie in [0, 1], got {}", min_converged_fraction));
  }
}

PerturbationConfig sample_coefficients(const SearchSpec& spec, std::size_t classes, std::size_t order,
                                       std::size_t trial) {
  Rng rng(derive_seed(spec.seed, "search", (static_cast<std::uint64_t>(order) << 32) | trial));
  const std::size_t n_rows = spec.tie_classes ? 1 : classes;
  std::vector<std::vector<double>> rows(n_rows, std::vector<double>(order));
  for (auto& r : rows) {
    for (double& e : r) e = rng.uniform(spec.range_low, spec.range_high);
  }
  return PerturbationConfig(std::move(rows), spec.tie_classes);
}

SearchResult search_coefficients(std::span<const ProbVector> teacher_val, std::span<const ProbVector> labels,
                                 const SearchSpec& spec, const SolverConfig& solver) {
  spec.validate();
  solver.validate();
  check_paired(teacher_val, labels);
  const std::size_t classes = teacher_val.front().size();

  SearchResult result;
  double best = std::numeric_limits<double>::infinity();
  std::vector<ProbVector> proxies;
  proxies.reserve(teacher_val.size());

  for (std::size_t order = 1; order <= spec.max_order; ++order) {
    for (std::size_t trial = 0; trial <= spec.trials_per_order; ++trial) {
      TrialRecord record;
      record.order = order;
      record.trial = trial;
      record.config = trial == 0 ? PerturbationConfig::zero(classes, order, spec.tie_classes)
                                 : sample_coefficients(spec, classes, order, trial);

      const ProxyBatch batch = solve_proxy_batch(teacher_val, record.config, solver);
      record.converged_fraction = batch.converged_fraction;
      if (batch.converged_fraction >= spec.min_converged_fraction) {
        proxies.clear();
        for (const auto& s : batch.solutions) proxies.push_back(s.proxy);
        const QualityScore score = quality_score(proxies, labels);
        record.score = score;
        if (order == 1 && trial == 0) result.baseline_score = score;
        if (score.total < best) {
          best = score.total;
          result.best = record.config;
          result.score = score;
          result.best_order = order;
          result.best_trial = trial;
        }
      } else {
        ++result.discarded;
      }
      record.best_so_far = best;
      result.trials.push_back(std::move(record));
    }
  }

  if (!std::isfinite(best)) {
    throw SearchFailure("every coefficient sample was discarded",
                        fmt::format("{} samples, none reached a convergence fraction of {}", result.trials.size(),
                                    spec.min_converged_fraction));
  }
  return result;
}

double spearman_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidInput("spearman inputs differ in length");
  if (x.size() < 2) throw InvalidInput("spearman correlation needs at least 2 points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mean = 0.5 * static_cast<double>(x.size() + 1);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace ptloss
