#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "confsel/error.hpp"

namespace confsel::io {

/// Header plus string cells. Line numbers in messages are 1-based file
/// lines (the header is line 1).
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> find_column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  }

  std::size_t column(std::string_view name) const {
    if (auto c = find_column(name)) return *c;
    throw IngestionError(std::string(name), source + ": missing column '" + std::string(name) + "'");
  }

  /// Finite real in (row, col); anything else is rejected with its location.
  double real(std::size_t row, std::size_t col) const {
    if (auto v = optional_real(row, col)) return *v;
    throw IngestionError(header[col], where(row, col) + ": missing value");
  }

  /// Empty cell -> nullopt; otherwise a finite real.
  std::optional<double> optional_real(std::size_t row, std::size_t col) const {
    std::string_view cell = trim(rows[row][col]);
    if (cell.empty()) return std::nullopt;
    double value = 0.0;
    if (cell.front() == '+') cell.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw IngestionError(header[col], where(row, col) + ": not a number: '" + rows[row][col] + "'");
    }
    if (!std::isfinite(value)) {
      throw IngestionError(header[col], where(row, col) + ": non-finite value '" + rows[row][col] + "'");
    }
    return value;
  }

  std::string text(std::size_t row, std::size_t col) const { return std::string(trim(rows[row][col])); }

  std::string where(std::size_t row, std::size_t col) const {
    return source + " line " + std::to_string(row + 2) + ", column '" + header[col] + "'";
  }

  static std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
  }
};

namespace detail {

// Splits one record; supports double-quoted fields with "" escapes.
inline std::vector<std::string> split_record(std::string_view line, const std::string& where) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  if (quoted) throw IngestionError("csv", where + ": unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace detail

inline CsvTable parse_csv(std::istream& in, std::string source) {
  CsvTable table;
  table.source = std::move(source);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (CsvTable::trim(line).empty()) continue;
    const std::string where = table.source + " line " + std::to_string(line_no);
    auto fields = detail::split_record(line, where);
    if (!have_header) {
      for (auto& f : fields) f = std::string(CsvTable::trim(f));
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw IngestionError("csv", where + ": expected " + std::to_string(table.header.size()) + " fields, found " +
                                      std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw IngestionError("csv", table.source + ": no header row");
  return table;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_csv(in, path.string());
}

/// Writes through a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

/// Shortest round-trip decimal form.
inline std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace confsel::io
