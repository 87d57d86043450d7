#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

#include "ibart/units.hpp"

namespace ibart {

// A numeric CSV: header names, an optional `#units:` row, then data rows.
struct Table {
  std::vector<std::string> names;
  std::vector<Unit> units;  // empty when the file has no units row
  Eigen::MatrixXd data;

  std::size_t column(const std::string& name) const;  // throws if absent
};

// Throws IoError when the file cannot be read, ValidationError on malformed
// content (ragged rows, non-numeric cells, duplicate names).
Table read_csv(const std::filesystem::path& path);
Table parse_csv(const std::string& text);

// Full-precision, locale-independent rendering of a double.
std::string format_double(double v);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
               const Eigen::MatrixXd& data);

// Splits the named column off as the response.
struct Dataset {
  Table features;
  Eigen::VectorXd y;
  std::string response;
};
Dataset split_response(const Table& table, const std::string& response);
// Response from a separate single-column CSV.
Dataset join_response(const Table& features, const Table& response);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace ibart
