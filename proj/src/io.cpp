// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#include "ptloss/io.hpp"

#include <array>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "ptloss/error.hpp"

namespace ptloss::io {
namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  return out;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string token;
  std::istringstream ss(line);
  while (std::getline(ss, token, ',')) out.push_back(token);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& token, const std::string& context) {
  const char* begin = token.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE) {
    throw SchemaError(fmt::format("{}: '{}' is not a number", context, token));
  }
  return v;
}

void write_probabilities_csv(const std::filesystem::path& path, std::span<const ProbVector> rows) {
  if (rows.empty()) throw InvalidInput("no probability rows to write");
  auto out = open_output(path);
  const std::size_t classes = rows.front().size();
  for (std::size_t c = 0; c < classes; ++c) out << (c ? "," : "") << "p_" << c;
  out << '\n';
  for (const ProbVector& p : rows) {
    for (std::size_t c = 0; c < classes; ++c) out << (c ? "," : "") << format_double(p[c]);
    out << '\n';
  }
}

std::vector<ProbVector> read_probabilities_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(fmt::format("'{}' is empty", path.string()));
  const auto header = split_csv_line(strip_cr(line));
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] != fmt::format("p_{}", c)) {
      throw SchemaError(fmt::format("'{}': expected column p_{}, found '{}'", path.string(), c, header[c]));
    }
  }
  std::vector<ProbVector> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw SchemaError(fmt::format("'{}' line {}: expected {} columns", path.string(), line_no, header.size()));
    }
    std::vector<double> values(cells.size());
    const std::string context = fmt::format("'{}' line {}", path.string(), line_no);
    for (std::size_t c = 0; c < cells.size(); ++c) values[c] = parse_double(cells[c], context);
    try {
      rows.emplace_back(std::move(values));
    } catch (const InvalidInput& e) {
      throw SchemaError(fmt::format("{}: {}", context, e.what()));
    }
  }
  if (rows.empty()) throw SchemaError(fmt::format("'{}' has no data rows", path.string()));
  return rows;
}

void write_labels_csv(const std::filesystem::path& path, std::span<const std::size_t> labels) {
  auto out = open_output(path);
  out << "label\n";
  for (const std::size_t y : labels) out << y << '\n';
}

std::vector<std::size_t> read_labels_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != "label") {
    throw SchemaError(fmt::format("'{}': expected a single 'label' header", path.string()));
  }
  std::vector<std::size_t> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const double v = parse_double(line, fmt::format("'{}' line {}", path.string(), line_no));
    if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
      throw SchemaError(fmt::format("'{}' line {}: label must be a nonnegative integer", path.string(), line_no));
    }
    labels.push_back(static_cast<std::size_t>(v));
  }
  if (labels.empty()) throw SchemaError(fmt::format("'{}' has no data rows", path.string()));
  return labels;
}

Json to_json(const PerturbationConfig& cfg) {
  Json doc;
  doc["order"] = cfg.order();
  doc["tie_classes"] = cfg.tie_classes();
  doc["matrix"] = cfg.rows();
  return doc;
}

PerturbationConfig config_from_json(const Json& doc) {
  try {
    const auto order = doc.at("order").get<std::size_t>();
    const bool tie = doc.value("tie_classes", false);
    auto rows = doc.at("matrix").get<std::vector<std::vector<double>>>();
    if (order == 0) return {};
    for (const auto& r : rows) {
      if (r.size() != order) throw SchemaError("coefficient matrix row length differs from 'order'");
    }
    return PerturbationConfig(std::move(rows), tie);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(fmt::format("invalid coefficient document: {}", e.what()));
  } catch (const InvalidInput& e) {
    throw SchemaError(fmt::format("invalid coefficient document: {}", e.what()));
  }
}

Json read_json(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

void write_json(const std::filesystem::path& path, const Json& doc) { write_text(path, doc.dump(2) + "\n"); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
}

std::string sha256_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx, digest.data(), &length);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

}  // namespace ptloss::io
