// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#pragma once

#include <stdexcept>
#include <string>

namespace ptloss {

/// Base of every domain error raised by the library. `kind()` is a stable,
/// machine-parsable tag used by the CLI when reporting failures.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& message) : Error("invalid-input", message) {}
};

class DegenerateTeacher : public Error {
 public:
  explicit DegenerateTeacher(const std::string& message) : Error("degenerate-teacher", message) {}
};

class SolverDivergence : public Error {
 public:
  explicit SolverDivergence(const std::string& message) : Error("solver-divergence", message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("configuration", message) {}
};

class SearchFailure : public Error {
 public:
  SearchFailure(const std::string& message, std::string diagnostics)
      : Error("search-failure", message), diagnostics_(std::move(diagnostics)) {}

  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

/// A file that does not exist or cannot be opened.
class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io", message) {}
};

/// A file whose contents do not match the expected format.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& message) : Error("schema", message) {}
};

class TrainingDivergence : public Error {
 public:
  TrainingDivergence(const std::string& message, int epoch, int batch)
      : Error("training-divergence", message), epoch_(epoch), batch_(batch) {}

  int epoch() const noexcept { return epoch_; }
  int batch() const noexcept { return batch_; }

 private:
  int epoch_;
  int batch_;
};

}  // namespace ptloss
