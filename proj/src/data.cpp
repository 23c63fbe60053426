// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#include "ptloss/data.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "ptloss/error.hpp"
#include "ptloss/io.hpp"
#include "ptloss/rng.hpp"

namespace ptloss {
namespace {

bool same_row(const Matrix& m, Eigen::Index a, Eigen::Index b) { return (m.row(a).array() == m.row(b).array()).all(); }

}  // namespace

GaussianMixtureSpec GaussianMixtureSpec::sample(std::size_t num_classes, std::size_t dim, double sigma,
                                                std::uint64_t seed) {
  if (num_classes < 2) throw InvalidInput("a mixture needs at least 2 classes");
  if (dim < 1) throw InvalidInput("a mixture needs dimension >= 1");
  if (!(sigma > 0.0)) throw InvalidInput(fmt::format("sigma must be positive, got {}", sigma));
  // 3^dim distinct means exist; refuse requests that cannot be satisfied.
  if (dim < 40 && std::pow(3.0, static_cast<double>(dim)) < static_cast<double>(num_classes)) {
    throw InvalidInput("too many classes for distinct {-1, 0, 1} means at this dimension");
  }
  GaussianMixtureSpec spec;
  spec.num_classes = num_classes;
  spec.dim = dim;
  spec.sigma = sigma;
  spec.seed = seed;
  spec.means = Matrix::Zero(static_cast<Eigen::Index>(num_classes), static_cast<Eigen::Index>(dim));
  Rng rng(derive_seed(seed, "means"));
  for (Eigen::Index k = 0; k < spec.means.rows(); ++k) {
    bool duplicate = true;
    while (duplicate) {
      for (Eigen::Index j = 0; j < spec.means.cols(); ++j) {
        spec.means(k, j) = static_cast<double>(rng.below(3)) - 1.0;
      }
      duplicate = false;
      for (Eigen::Index other = 0; other < k; ++other) duplicate = duplicate || same_row(spec.means, k, other);
    }
  }
  return spec;
}

void GaussianMixtureSpec::validate() const {
  if (num_classes < 2) throw InvalidInput("a mixture needs at least 2 classes");
  if (!(sigma > 0.0)) throw InvalidInput(fmt::format("sigma must be positive, got {}", sigma));
  if (means.rows() != static_cast<Eigen::Index>(num_classes) || means.cols() != static_cast<Eigen::Index>(dim)) {
    throw InvalidInput(fmt::format("means must be {} x {}", num_classes, dim));
  }
  for (Eigen::Index i = 0; i < means.size(); ++i) {
    const double v = means.data()[i];
    if (v != -1.0 && v != 0.0 && v != 1.0) throw InvalidInput("mean entries must lie in {-1, 0, 1}");
  }
}

std::vector<ProbVector> DataSplit::one_hot(std::size_t num_classes) const {
  std::vector<ProbVector> out;
  out.reserve(labels.size());
  for (const std::size_t y : labels) out.push_back(ProbVector::one_hot(y, num_classes));
  return out;
}

LabeledDataset generate(const GaussianMixtureSpec& spec, std::size_t n, std::array<double, 3> split_ratio) {
  spec.validate();
  if (n < spec.num_classes) {
    throw InvalidInput(fmt::format("need at least {} examples, got {}", spec.num_classes, n));
  }
  double ratio_sum = 0.0;
  for (const double r : split_ratio) {
    if (!(r >= 0.0)) throw InvalidInput("split ratios must be nonnegative");
    ratio_sum += r;
  }
  if (std::abs(ratio_sum - 1.0) > 1e-9) throw InvalidInput(fmt::format("split ratios sum to {}, not 1", ratio_sum));

  const auto n_train = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(static_cast<double>(n) * split_ratio[0])));
  const auto n_val =
      std::min<std::size_t>(n - n_train, static_cast<std::size_t>(std::llround(static_cast<double>(n) * split_ratio[1])));
  const std::array<std::size_t, 3> sizes{n_train, n_val, n - n_train - n_val};

  LabeledDataset data;
  data.num_classes = spec.num_classes;
  std::array<DataSplit*, 3> splits{&data.train, &data.validation, &data.test};
  const auto dim = static_cast<Eigen::Index>(spec.dim);

  Rng rng(derive_seed(spec.seed, "samples"));
  for (std::size_t s = 0; s < 3; ++s) {
    DataSplit& split = *splits[s];
    split.inputs.resize(static_cast<Eigen::Index>(sizes[s]), dim);
    split.labels.resize(sizes[s]);
    for (std::size_t i = 0; i < sizes[s]; ++i) {
      const auto y = static_cast<std::size_t>(rng.below(spec.num_classes));
      split.labels[i] = y;
      for (Eigen::Index j = 0; j < dim; ++j) {
        split.inputs(static_cast<Eigen::Index>(i), j) =
            spec.means(static_cast<Eigen::Index>(y), j) + spec.sigma * rng.normal();
      }
    }
  }
  return data;
}

ProbVector true_posterior(const GaussianMixtureSpec& spec, std::span<const double> x) {
  if (x.size() != spec.dim) throw InvalidInput(fmt::format("expected a {}-vector, got {}", spec.dim, x.size()));
  std::vector<double> logits(spec.num_classes);
  const double denom = 2.0 * spec.sigma * spec.sigma;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < spec.dim; ++j) {
      const double diff = x[j] - spec.means(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j));
      d2 += diff * diff;
    }
    logits[c] = -d2 / denom;
  }
  return softmax(logits);
}

std::vector<ProbVector> true_posteriors(const GaussianMixtureSpec& spec, const Matrix& inputs) {
  std::vector<ProbVector> out;
  out.reserve(static_cast<std::size_t>(inputs.rows()));
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    out.push_back(true_posterior(spec, std::span<const double>(inputs.row(i).data(), static_cast<std::size_t>(inputs.cols()))));
  }
  return out;
}

void write_split_csv(const std::filesystem::path& path, const DataSplit& split) {
  std::string text;
  for (Eigen::Index j = 0; j < split.inputs.cols(); ++j) text += fmt::format("x_{},", j);
  text += "label\n";
  for (Eigen::Index i = 0; i < split.inputs.rows(); ++i) {
    for (Eigen::Index j = 0; j < split.inputs.cols(); ++j) {
      text += io::format_double(split.inputs(i, j));
      text += ',';
    }
    text += fmt::format("{}\n", split.labels[static_cast<std::size_t>(i)]);
  }
  io::write_text(path, text);
}

DataSplit read_split_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(fmt::format("'{}' is empty", path.string()));
  const auto header = io::split_csv_line(line);
  if (header.empty() || header.back() != "label") {
    throw SchemaError(fmt::format("'{}': last column must be 'label'", path.string()));
  }
  const std::size_t dim = header.size() - 1;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[j] != fmt::format("x_{}", j)) {
      throw SchemaError(fmt::format("'{}': expected column x_{}, found '{}'", path.string(), j, header[j]));
    }
  }
  std::vector<double> values;
  DataSplit split;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = io::split_csv_line(line);
    if (cells.size() != dim + 1) {
      throw SchemaError(fmt::format("'{}' line {}: expected {} columns", path.string(), line_no, dim + 1));
    }
    const std::string context = fmt::format("'{}' line {}", path.string(), line_no);
    for (std::size_t j = 0; j < dim; ++j) values.push_back(io::parse_double(cells[j], context));
    const double y = io::parse_double(cells[dim], context);
    if (y < 0.0 || y != std::floor(y)) throw SchemaError(fmt::format("{}: label must be a nonnegative integer", context));
    split.labels.push_back(static_cast<std::size_t>(y));
  }
  split.inputs = Eigen::Map<Matrix>(values.data(), static_cast<Eigen::Index>(split.labels.size()),
                                    static_cast<Eigen::Index>(dim));
  return split;
}

void write_dataset(const std::filesystem::path& dir, const GaussianMixtureSpec& spec, const LabeledDataset& data) {
  std::filesystem::create_directories(dir);
  write_split_csv(dir / "train.csv", data.train);
  write_split_csv(dir / "validation.csv", data.validation);
  write_split_csv(dir / "test.csv", data.test);

  io::Json doc;
  doc["num_classes"] = spec.num_classes;
  doc["dim"] = spec.dim;
  doc["sigma"] = spec.sigma;
  doc["seed"] = spec.seed;
  io::Json means = io::Json::array();
  for (Eigen::Index k = 0; k < spec.means.rows(); ++k) {
    std::vector<double> row(spec.means.row(k).begin(), spec.means.row(k).end());
    means.push_back(row);
  }
  doc["means"] = means;
  doc["splits"] = {{"train", data.train.size()}, {"validation", data.validation.size()}, {"test", data.test.size()}};
  io::write_json(dir / "spec.json", doc);
}

StoredDataset read_dataset(const std::filesystem::path& dir) {
  const io::Json doc = io::read_json(dir / "spec.json");
  StoredDataset out;
  try {
    out.spec.num_classes = doc.at("num_classes").get<std::size_t>();
    out.spec.dim = doc.at("dim").get<std::size_t>();
    out.spec.sigma = doc.at("sigma").get<double>();
    out.spec.seed = doc.at("seed").get<std::uint64_t>();
    const auto rows = doc.at("means").get<std::vector<std::vector<double>>>();
    out.spec.means.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(out.spec.dim));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].size() != out.spec.dim) throw SchemaError("spec.json: mean row has the wrong length");
      for (std::size_t j = 0; j < out.spec.dim; ++j) {
        out.spec.means(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = rows[k][j];
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(fmt::format("'{}': {}", (dir / "spec.json").string(), e.what()));
  }
  out.spec.validate();
  out.data.num_classes = out.spec.num_classes;
  out.data.train = read_split_csv(dir / "train.csv");
  out.data.validation = read_split_csv(dir / "validation.csv");
  out.data.test = read_split_csv(dir / "test.csv");
  for (const DataSplit* s : {&out.data.train, &out.data.validation, &out.data.test}) {
    if (s->size() > 0 && static_cast<std::size_t>(s->inputs.cols()) != out.spec.dim) {
      throw SchemaError("split dimension does not match spec.json");
    }
    for (const std::size_t y : s->labels) {
      if (y >= out.spec.num_classes) throw SchemaError("split label out of range for spec.json");
    }
  }
  return out;
}

}  // namespace ptloss
