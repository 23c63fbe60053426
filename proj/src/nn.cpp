// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#include "ptloss/nn.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "ptloss/error.hpp"
#include "ptloss/rng.hpp"

namespace ptloss {
namespace {

void check_input(const MlpModel& model, const Matrix& inputs) {
  if (static_cast<std::size_t>(inputs.cols()) != model.input_dim()) {
    throw InvalidInput(fmt::format("model expects {} input features, got {}", model.input_dim(), inputs.cols()));
  }
}

struct ForwardPass {
  std::vector<Matrix> pre;   // affine outputs per layer
  std::vector<Matrix> post;  // post[0] = inputs, post[l + 1] = relu(pre[l]) on hidden layers
};

ForwardPass run_forward(const MlpModel& model, const Matrix& inputs) {
  ForwardPass pass;
  const std::size_t layers = model.weights.size();
  pass.pre.resize(layers);
  pass.post.resize(layers);
  pass.post[0] = inputs;
  for (std::size_t l = 0; l < layers; ++l) {
    pass.pre[l].noalias() = pass.post[l] * model.weights[l];
    pass.pre[l].rowwise() += model.biases[l];
    if (l + 1 < layers) pass.post[l + 1] = pass.pre[l].cwiseMax(0.0);
  }
  return pass;
}

// Mean loss over rows plus d(mean loss)/d(logits).
double loss_rows(const Matrix& logits, std::span<const ProbVector> targets, std::span<const std::size_t> rows,
                 const LossFunction& loss, Matrix* dlogits, std::size_t* agree) {
  const auto classes = static_cast<std::size_t>(logits.cols());
  const double scale = 1.0 / static_cast<double>(rows.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const ProbVector& target = targets[rows[static_cast<std::size_t>(i)]];
    const std::span<const double> z(logits.row(i).data(), classes);
    const LossEvaluation eval = loss.evaluate(target, z, dlogits != nullptr);
    total += eval.value;
    if (dlogits) {
      for (std::size_t c = 0; c < classes; ++c) (*dlogits)(i, static_cast<Eigen::Index>(c)) = scale * (*eval.gradient)[c];
    }
    if (agree) {
      Eigen::Index best = 0;
      logits.row(i).maxCoeff(&best);
      if (static_cast<std::size_t>(best) == target.argmax()) ++*agree;
    }
  }
  return total;
}

ParameterGradient backward(const MlpModel& model, const ForwardPass& pass, Matrix dz) {
  const std::size_t layers = model.weights.size();
  ParameterGradient grad;
  grad.weights.resize(layers);
  grad.biases.resize(layers);
  for (std::size_t l = layers; l-- > 0;) {
    grad.weights[l].noalias() = pass.post[l].transpose() * dz;
    grad.biases[l] = dz.colwise().sum();
    if (l > 0) {
      Matrix upstream = dz * model.weights[l].transpose();
      dz = (pass.pre[l - 1].array() > 0.0).select(upstream, 0.0);
    }
  }
  return grad;
}

Matrix gather_rows(const Matrix& inputs, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), inputs.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = inputs.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

bool parameters_finite(const MlpModel& model) {
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    if (!model.weights[l].allFinite() || !model.biases[l].allFinite()) return false;
  }
  return true;
}

}  // namespace

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  return n;
}

MlpModel init_mlp(std::span<const std::size_t> layer_dims, std::uint64_t seed) {
  if (layer_dims.size() < 2) throw InvalidInput("an MLP needs at least input and output dimensions");
  for (const std::size_t d : layer_dims) {
    if (d < 1) throw InvalidInput("layer dimensions must be at least 1");
  }
  MlpModel model;
  model.layer_dims.assign(layer_dims.begin(), layer_dims.end());
  model.seed = seed;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const auto fan_in = static_cast<Eigen::Index>(layer_dims[l]);
    const auto fan_out = static_cast<Eigen::Index>(layer_dims[l + 1]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Rng rng(derive_seed(seed, "init", l));
    Matrix w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
    model.weights.push_back(std::move(w));
    model.biases.push_back(RowVector::Zero(fan_out));
  }
  return model;
}

LogitVector forward(const MlpModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw InvalidInput(fmt::format("model expects {} input features, got {}", model.input_dim(), x.size()));
  }
  const Matrix row = Eigen::Map<const Matrix>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
  const Matrix logits = forward_batch(model, row);
  return LogitVector(std::vector<double>(logits.data(), logits.data() + logits.size()));
}

Matrix forward_batch(const MlpModel& model, const Matrix& inputs) {
  check_input(model, inputs);
  ForwardPass pass = run_forward(model, inputs);
  return std::move(pass.pre.back());
}

std::vector<ProbVector> predict_probs(const MlpModel& model, const Matrix& inputs) {
  const Matrix logits = forward_batch(model, inputs);
  std::vector<ProbVector> out;
  out.reserve(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    out.push_back(softmax(std::span<const double>(logits.row(i).data(), static_cast<std::size_t>(logits.cols()))));
  }
  return out;
}

double accuracy(const MlpModel& model, const Matrix& inputs, std::span<const std::size_t> labels) {
  if (static_cast<std::size_t>(inputs.rows()) != labels.size()) throw InvalidInput("inputs and labels differ in length");
  if (labels.empty()) return 0.0;
  const Matrix logits = forward_batch(model, inputs);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    if (static_cast<std::size_t>(best) == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
}

TrainResult train(MlpModel model, const Matrix& inputs, std::span<const ProbVector> targets, const LossFunction& loss,
                  const TrainConfig& config) {
  config.validate();
  check_input(model, inputs);
  const auto n = static_cast<std::size_t>(inputs.rows());
  if (targets.size() != n) throw InvalidInput("inputs and targets differ in length");
  for (const ProbVector& t : targets) {
    if (t.size() != model.output_dim()) throw InvalidInput("target class count differs from the model output");
  }
  if (loss.kind() == LossFunction::Kind::pt) loss.config().check_classes(model.output_dim());

  TrainResult result;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> all_rows = order;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) {
      std::iota(order.begin(), order.end(), 0);
      Rng rng(derive_seed(config.seed, "shuffle", epoch));
      rng.shuffle(std::span<std::size_t>(order));
    }
    double epoch_loss = 0.0;
    std::size_t agree = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_index) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(config.batch_size, n - start));
      const Matrix x = gather_rows(inputs, rows);
      const ForwardPass pass = run_forward(model, x);
      if (!pass.pre.back().allFinite()) {
        throw TrainingDivergence(fmt::format("non-finite logits at epoch {} batch {}", epoch, batch_index),
                                 static_cast<int>(epoch), static_cast<int>(batch_index));
      }
      Matrix dz(pass.pre.back().rows(), pass.pre.back().cols());
      const double batch_loss = loss_rows(pass.pre.back(), targets, rows, loss, &dz, &agree);
      if (!std::isfinite(batch_loss)) {
        throw TrainingDivergence(fmt::format("non-finite loss at epoch {} batch {}", epoch, batch_index),
                                 static_cast<int>(epoch), static_cast<int>(batch_index));
      }
      epoch_loss += batch_loss;
      const ParameterGradient grad = backward(model, pass, std::move(dz));
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        model.weights[l] -= config.learning_rate * grad.weights[l];
        model.biases[l] -= config.learning_rate * grad.biases[l];
      }
      if (!parameters_finite(model)) {
        throw TrainingDivergence(fmt::format("non-finite parameter at epoch {} batch {}", epoch, batch_index),
                                 static_cast<int>(epoch), static_cast<int>(batch_index));
      }
    }
    EpochStats stats;
    if (config.full_batch_history) {
      const Matrix logits = forward_batch(model, inputs);
      std::size_t full_agree = 0;
      stats.mean_loss = loss_rows(logits, targets, all_rows, loss, nullptr, &full_agree) / static_cast<double>(n);
      stats.accuracy = static_cast<double>(full_agree) / static_cast<double>(n);
    } else {
      stats.mean_loss = n ? epoch_loss / static_cast<double>(n) : 0.0;
      stats.accuracy = n ? static_cast<double>(agree) / static_cast<double>(n) : 0.0;
    }
    result.history.push_back(stats);
  }
  result.model = std::move(model);
  return result;
}

ParameterGradient loss_and_gradient(const MlpModel& model, const Matrix& inputs,
                                    std::span<const ProbVector> targets, const LossFunction& loss) {
  check_input(model, inputs);
  const auto n = static_cast<std::size_t>(inputs.rows());
  if (targets.size() != n || n == 0) throw InvalidInput("inputs and targets must be nonempty and equal in length");
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  const ForwardPass pass = run_forward(model, inputs);
  Matrix dz(pass.pre.back().rows(), pass.pre.back().cols());
  const double total = loss_rows(pass.pre.back(), targets, rows, loss, &dz, nullptr);
  ParameterGradient grad = backward(model, pass, std::move(dz));
  grad.loss = total / static_cast<double>(n);
  return grad;
}

std::vector<double> flatten_parameters(const MlpModel& model) {
  std::vector<double> flat;
  flat.reserve(model.parameter_count());
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    flat.insert(flat.end(), model.weights[l].data(), model.weights[l].data() + model.weights[l].size());
    flat.insert(flat.end(), model.biases[l].data(), model.biases[l].data() + model.biases[l].size());
  }
  return flat;
}

std::vector<double> flatten_gradient(const ParameterGradient& grad) {
  std::vector<double> flat;
  for (std::size_t l = 0; l < grad.weights.size(); ++l) {
    flat.insert(flat.end(), grad.weights[l].data(), grad.weights[l].data() + grad.weights[l].size());
    flat.insert(flat.end(), grad.biases[l].data(), grad.biases[l].data() + grad.biases[l].size());
  }
  return flat;
}

void assign_parameters(MlpModel& model, std::span<const double> flat) {
  if (flat.size() != model.parameter_count()) throw InvalidInput("parameter vector has the wrong length");
  std::size_t offset = 0;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    std::copy_n(flat.data() + offset, model.weights[l].size(), model.weights[l].data());
    offset += static_cast<std::size_t>(model.weights[l].size());
    std::copy_n(flat.data() + offset, model.biases[l].size(), model.biases[l].data());
    offset += static_cast<std::size_t>(model.biases[l].size());
  }
}

io::Json to_json(const MlpModel& model) {
  io::Json doc;
  doc["layer_dims"] = model.layer_dims;
  doc["seed"] = model.seed;
  io::Json weights = io::Json::array();
  io::Json biases = io::Json::array();
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    io::Json rows = io::Json::array();
    for (Eigen::Index i = 0; i < model.weights[l].rows(); ++i) {
      rows.push_back(std::vector<double>(model.weights[l].row(i).begin(), model.weights[l].row(i).end()));
    }
    weights.push_back(std::move(rows));
    biases.push_back(std::vector<double>(model.biases[l].begin(), model.biases[l].end()));
  }
  doc["weights"] = std::move(weights);
  doc["biases"] = std::move(biases);
  return doc;
}

MlpModel model_from_json(const io::Json& doc) {
  try {
    MlpModel model;
    model.layer_dims = doc.at("layer_dims").get<std::vector<std::size_t>>();
    model.seed = doc.at("seed").get<std::uint64_t>();
    const auto& weights = doc.at("weights");
    const auto& biases = doc.at("biases");
    if (model.layer_dims.size() < 2 || weights.size() != model.layer_dims.size() - 1 ||
        biases.size() != weights.size()) {
      throw SchemaError("model layer count does not match layer_dims");
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
      const auto rows = weights[l].get<std::vector<std::vector<double>>>();
      const auto bias = biases[l].get<std::vector<double>>();
      const std::size_t in = model.layer_dims[l];
      const std::size_t out = model.layer_dims[l + 1];
      if (rows.size() != in || bias.size() != out) throw SchemaError(fmt::format("layer {} has the wrong shape", l));
      Matrix w(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
      for (std::size_t i = 0; i < in; ++i) {
        if (rows[i].size() != out) throw SchemaError(fmt::format("layer {} has the wrong shape", l));
        for (std::size_t j = 0; j < out; ++j) w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
      model.weights.push_back(std::move(w));
      model.biases.push_back(Eigen::Map<const RowVector>(bias.data(), static_cast<Eigen::Index>(out)));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(fmt::format("invalid model document: {}", e.what()));
  }
}

}  // namespace ptloss
