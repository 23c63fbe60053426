// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ptloss/core.hpp"

namespace ptloss {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Equal-variance isotropic Gaussian mixture with uniform class prior.
struct GaussianMixtureSpec {
  std::size_t num_classes = 3;
  std::size_t dim = 30;
  double sigma = 2.0;
  Matrix means;  // num_classes x dim
  std::uint64_t seed = 0;

  /// Means with entries drawn uniformly from {-1, 0, 1}; a class whose mean
  /// duplicates an earlier one is redrawn.
  static GaussianMixtureSpec sample(std::size_t num_classes, std::size_t dim, double sigma, std::uint64_t seed);

  /// Checks the shape, sigma > 0 and the {-1, 0, 1} entry domain.
  void validate() const;
};

struct DataSplit {
  Matrix inputs;                   // N x dim
  std::vector<std::size_t> labels;  // class indices

  std::size_t size() const noexcept { return labels.size(); }
  std::vector<ProbVector> one_hot(std::size_t num_classes) const;
};

struct LabeledDataset {
  std::size_t num_classes = 0;
  DataSplit train;
  DataSplit validation;
  DataSplit test;
};

/// Draws n labelled points: y uniform over classes, x | y ~ N(mu_y, sigma^2 I).
/// The first round(n * ratio[0]) points form the train split, the next
/// round(n * ratio[1]) the validation split and the rest the test split.
LabeledDataset generate(const GaussianMixtureSpec& spec, std::size_t n, std::array<double, 3> split_ratio);

/// Bayes posterior softmax_c(-||x - mu_c||^2 / (2 sigma^2)).
ProbVector true_posterior(const GaussianMixtureSpec& spec, std::span<const double> x);
std::vector<ProbVector> true_posteriors(const GaussianMixtureSpec& spec, const Matrix& inputs);

/// CSV with header x_0..x_{d-1},label.
void write_split_csv(const std::filesystem::path& path, const DataSplit& split);
DataSplit read_split_csv(const std::filesystem::path& path);

/// Writes train.csv, validation.csv, test.csv and spec.json into `dir`.
void write_dataset(const std::filesystem::path& dir, const GaussianMixtureSpec& spec, const LabeledDataset& data);
struct StoredDataset {
  GaussianMixtureSpec spec;
  LabeledDataset data;
};
StoredDataset read_dataset(const std::filesystem::path& dir);

}  // namespace ptloss
