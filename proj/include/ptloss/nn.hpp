// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ptloss/core.hpp"
#include "ptloss/data.hpp"
#include "ptloss/io.hpp"
#include "ptloss/losses.hpp"

namespace ptloss {

using RowVector = Eigen::RowVectorXd;

/// Fully connected classifier: ReLU on hidden layers, identity output.
/// weights[l] has shape layer_dims[l] x layer_dims[l + 1].
struct MlpModel {
  std::vector<std::size_t> layer_dims;
  std::vector<Matrix> weights;
  std::vector<RowVector> biases;
  std::uint64_t seed = 0;

  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t parameter_count() const;
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
MlpModel init_mlp(std::span<const std::size_t> layer_dims, std::uint64_t seed);

LogitVector forward(const MlpModel& model, std::span<const double> x);
/// N x C logits for the N rows of `inputs`.
Matrix forward_batch(const MlpModel& model, const Matrix& inputs);
std::vector<ProbVector> predict_probs(const MlpModel& model, const Matrix& inputs);
double accuracy(const MlpModel& model, const Matrix& inputs, std::span<const std::size_t> labels);

struct TrainConfig {
  double learning_rate = 5e-4;
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  bool shuffle = true;
  /// Record loss/accuracy from a full pass after each epoch instead of the
  /// running average over the epoch's minibatches.
  bool full_batch_history = false;

  void validate() const;
};

struct EpochStats {
  double mean_loss = 0.0;
  double accuracy = 0.0;  // agreement of argmax(student) with argmax(target)
};

struct TrainResult {
  MlpModel model;
  std::vector<EpochStats> history;
};

/// Plain minibatch SGD on the mean per-example loss. Epoch e visits the
/// examples in an order drawn from derive_seed(seed, "shuffle", e).
/// Throws TrainingDivergence on a non-finite loss or parameter.
TrainResult train(MlpModel model, const Matrix& inputs, std::span<const ProbVector> targets, const LossFunction& loss,
                  const TrainConfig& config);

struct ParameterGradient {
  double loss = 0.0;  // mean over rows
  std::vector<Matrix> weights;
  std::vector<RowVector> biases;
};

ParameterGradient loss_and_gradient(const MlpModel& model, const Matrix& inputs,
                                    std::span<const ProbVector> targets, const LossFunction& loss);

/// Weights then bias of each layer, row-major.
std::vector<double> flatten_parameters(const MlpModel& model);
std::vector<double> flatten_gradient(const ParameterGradient& grad);
void assign_parameters(MlpModel& model, std::span<const double> flat);

io::Json to_json(const MlpModel& model);
MlpModel model_from_json(const io::Json& doc);

}  // namespace ptloss
