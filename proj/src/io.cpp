#include "ibart/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <unordered_set>

#include "ibart/error.hpp"

namespace ibart {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Splits one CSV record; double quotes group commas and "" escapes a quote.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ValidationError("unterminated quote in CSV record");
  out.push_back(trim(cur));
  return out;
}

double parse_number(const std::string& cell, std::size_t line, std::size_t col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last)
    throw ValidationError("line " + std::to_string(line) + ", column " +
                          std::to_string(col + 1) + ": '" + cell + "' is not a number");
  return v;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw ValidationError("no column named '" + name + "'");
}

Table parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  Table t;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (t.names.empty()) {
      t.names = split_record(line);
      std::unordered_set<std::string> seen;
      for (const auto& n : t.names) {
        if (n.empty()) throw ValidationError("empty column name in CSV header");
        if (!seen.insert(n).second) throw ValidationError("duplicate column name '" + n + "'");
      }
      continue;
    }
    auto cells = split_record(line);
    if (cells.size() != t.names.size())
      throw ValidationError("line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " fields, expected " +
                            std::to_string(t.names.size()));
    if (cells[0].rfind("#units:", 0) == 0) {
      if (!rows.empty() || !t.units.empty())
        throw ValidationError("the #units: row must directly follow the header");
      cells[0] = trim(cells[0].substr(7));
      for (const auto& c : cells) t.units.push_back(Unit::parse(c));
      continue;
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      row.push_back(parse_number(cells[c], line_no, c));
    rows.push_back(std::move(row));
  }
  if (t.names.empty()) throw ValidationError("CSV has no header");
  t.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < t.names.size(); ++c)
      t.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return t;
}

Table read_csv(const std::filesystem::path& path) { return parse_csv(read_text(path)); }

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, ptr);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
               const Eigen::MatrixXd& data) {
  if (static_cast<Eigen::Index>(names.size()) != data.cols())
    throw ValidationError("CSV header and data widths differ");
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) out += (i ? "," : "") + quote(names[i]);
  out += '\n';
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      if (c) out += ',';
      out += format_double(data(r, c));
    }
    out += '\n';
  }
  write_text(path, out);
}

Dataset split_response(const Table& table, const std::string& response) {
  const std::size_t col = table.column(response);
  Dataset d;
  d.response = response;
  d.y = table.data.col(static_cast<Eigen::Index>(col));
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < table.names.size(); ++i) {
    if (i == col) continue;
    keep.push_back(static_cast<Eigen::Index>(i));
    d.features.names.push_back(table.names[i]);
    if (!table.units.empty()) d.features.units.push_back(table.units[i]);
  }
  if (keep.empty()) throw ValidationError("no feature columns besides the response");
  d.features.data = table.data(Eigen::all, keep);
  return d;
}

Dataset join_response(const Table& features, const Table& response) {
  if (response.names.size() != 1)
    throw ValidationError("response CSV must have exactly one column");
  if (response.data.rows() != features.data.rows())
    throw ValidationError("response and feature files have different row counts");
  return Dataset{features, response.data.col(0), response.names[0]};
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "'");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error("SHA-256 computation failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text(path)); }

}  // namespace ibart
