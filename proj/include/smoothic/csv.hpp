#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace smoothic::csv {

/// Parse or I/O failure; the message is anchored as "path:line: what".
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what) {}
  explicit CsvError(const std::string& what) : std::runtime_error(what) {}
};

/// Round-trip-exact float formatting: up to 17 significant digits.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

/// Reads a comma-separated table with a header row. Every row must have as
/// many fields as the header; quoting is not supported.
inline Table read_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CsvError(path + ": cannot open file");
  }
  Table table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      table.header = split_fields(line);
      if (table.header.empty() || (table.header.size() == 1 && table.header[0].empty())) {
        throw CsvError(path, 1, "empty header row");
      }
      continue;
    }
    if (line.empty()) continue;  // tolerate a trailing blank line
    std::vector<std::string> fields = split_fields(line);
    if (fields.size() != table.header.size()) {
      throw CsvError(path, line_no,
                     "expected " + std::to_string(table.header.size()) + " fields, got " +
                         std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (line_no == 0) {
    throw CsvError(path, 1, "file is empty");
  }
  return table;
}

inline void write_table(const std::string& path, const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw CsvError(path + ": cannot open file for writing");
  }
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out << ',';
    out << header[c];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << row[c];
    }
    out << '\n';
  }
  if (!out) {
    throw CsvError(path + ": write failed");
  }
}

/// Strict full-cell numeric parse; locale-free and round-trip exact.
inline double parse_double(const std::string& cell, const std::string& path, std::size_t line) {
  if (cell.empty()) {
    throw CsvError(path, line, "empty numeric field");
  }
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;  // from_chars rejects an explicit plus sign
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec == std::errc::invalid_argument || ptr != last) {
    throw CsvError(path, line, "not a number: '" + cell + "'");
  }
  if (ec == std::errc::result_out_of_range) {
    throw CsvError(path, line, "number out of range: '" + cell + "'");
  }
  return value;
}

struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;  // column-major

  std::size_t row_count() const { return columns.empty() ? 0 : columns.front().size(); }
};

/// Reads a table and parses every cell as a double (data rows start at line 2).
inline NumericTable read_numeric(const std::string& path) {
  const Table raw = read_table(path);
  NumericTable table;
  table.header = raw.header;
  table.columns.assign(raw.header.size(), {});
  for (auto& col : table.columns) col.reserve(raw.rows.size());
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    for (std::size_t c = 0; c < raw.header.size(); ++c) {
      table.columns[c].push_back(parse_double(raw.rows[r][c], path, r + 2));
    }
  }
  return table;
}

}  // namespace smoothic::csv
