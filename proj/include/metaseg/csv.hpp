#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace metaseg::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;
};

/// Splits one CSV record. Double-quoted fields with `""` escapes are accepted.
std::vector<std::string> split_line(std::string_view line);

/// Reads a CSV file with a header row. Blank lines are skipped, CRLF is
/// tolerated. Rows whose field count differs from the header raise a
/// FormatError naming the file and line.
Table read(const std::filesystem::path& path);

/// Throws FormatError unless `table.header` equals `expected`.
void expect_header(const Table& table, const std::vector<std::string>& expected,
                   const std::filesystem::path& path);

/// Parses a finite double; FormatError names the file, line, and column.
double parse_double(const std::string& text, const std::filesystem::path& path, std::size_t line,
                    std::string_view column);
std::size_t parse_count(const std::string& text, const std::filesystem::path& path,
                        std::size_t line, std::string_view column);

/// `%.9g` rendering used by every CSV the toolkit writes.
std::string format_value(double value);

}  // namespace metaseg::csv
