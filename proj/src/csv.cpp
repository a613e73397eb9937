#include "metaseg/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "metaseg/errors.hpp"

namespace metaseg::csv {

namespace {

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

}  // namespace

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw FormatError(where(path, line_no) + ": expected " + std::to_string(table.header.size()) +
                        " fields, found " + std::to_string(fields.size()));
    }
    table.rows.push_back({line_no, std::move(fields)});
  }
  if (!have_header) throw FormatError(path.string() + ": missing header row");
  return table;
}

void expect_header(const Table& table, const std::vector<std::string>& expected,
                   const std::filesystem::path& path) {
  if (table.header == expected) return;
  std::string want;
  for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
  throw FormatError(path.string() + ":1: expected header '" + want + "'");
}

double parse_double(const std::string& text, const std::filesystem::path& path, std::size_t line,
                    std::string_view column) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw FormatError(where(path, line) + ": column " + std::string(column) +
                      ": not a finite number: '" + text + "'");
  }
  return value;
}

std::size_t parse_count(const std::string& text, const std::filesystem::path& path,
                        std::size_t line, std::string_view column) {
  std::size_t value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw FormatError(where(path, line) + ": column " + std::string(column) +
                      ": not a non-negative integer: '" + text + "'");
  }
  return value;
}

std::string format_value(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

}  // namespace metaseg::csv
