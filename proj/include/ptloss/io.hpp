// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptloss/core.hpp"
#include "ptloss/losses.hpp"

namespace ptloss::io {

using Json = nlohmann::ordered_json;

/// 17 significant digits; round-trips every double exactly.
std::string format_double(double value);

/// Splits one CSV line on commas (no quoting; none of our formats need it).
std::vector<std::string> split_csv_line(const std::string& line);
double parse_double(const std::string& token, const std::string& context);

/// Header p_0..p_{C-1}, one row per example.
void write_probabilities_csv(const std::filesystem::path& path, std::span<const ProbVector> rows);
std::vector<ProbVector> read_probabilities_csv(const std::filesystem::path& path);

/// Header `label`, one class index per row.
void write_labels_csv(const std::filesystem::path& path, std::span<const std::size_t> labels);
std::vector<std::size_t> read_labels_csv(const std::filesystem::path& path);

/// {"order": M, "tie_classes": bool, "matrix": [[...], ...]}
Json to_json(const PerturbationConfig& cfg);
PerturbationConfig config_from_json(const Json& doc);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& doc);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Lower-case hex SHA-256 of the file contents.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace ptloss::io
