#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace metaseg::binary_io {

void put_f32(std::ostream& out, float value);
void put_f64(std::ostream& out, double value);
void put_u64(std::ostream& out, std::uint64_t value);

/// Throws TruncationError when the stream ends early. `what` names the field.
float get_f32(std::istream& in, const std::string& what);
double get_f64(std::istream& in, const std::string& what);
std::uint64_t get_u64(std::istream& in, const std::string& what);

void put_f32_array(std::ostream& out, std::span<const float> values);
void put_f64_array(std::ostream& out, std::span<const double> values);
std::vector<float> get_f32_array(std::istream& in, std::size_t count, const std::string& what);
std::vector<double> get_f64_array(std::istream& in, std::size_t count, const std::string& what);

/// Reads one LF-terminated header line. Returns false at end of stream.
bool read_header_line(std::istream& in, std::string& line);

/// Reads header line `line_no` and requires it to equal `expected`.
void expect_line(std::istream& in, int line_no, const std::string& expected, const std::string& source);

/// Reads header line `line_no`, requires the form `<key>: <value>`, returns value.
std::string expect_field(std::istream& in, int line_no, const std::string& key,
                         const std::string& source);

std::size_t parse_size(const std::string& text, int line_no, const std::string& source);
double parse_real(const std::string& text, int line_no, const std::string& source);

/// True when only end-of-file remains.
bool at_end(std::istream& in);

std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace metaseg::binary_io
