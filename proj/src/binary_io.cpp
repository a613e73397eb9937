#include "metaseg/binary_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "metaseg/errors.hpp"

namespace metaseg::binary_io {

namespace {

template <typename T>
void put_le(std::ostream& out, T bits) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in, const std::string& what) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw TruncationError("unexpected end of payload while reading " + what);
  }
  T bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<T>(bytes[i]) << (8 * i);
  return bits;
}

}  // namespace

void put_f32(std::ostream& out, float value) { put_le(out, std::bit_cast<std::uint32_t>(value)); }
void put_f64(std::ostream& out, double value) { put_le(out, std::bit_cast<std::uint64_t>(value)); }
void put_u64(std::ostream& out, std::uint64_t value) { put_le(out, value); }

float get_f32(std::istream& in, const std::string& what) {
  return std::bit_cast<float>(get_le<std::uint32_t>(in, what));
}
double get_f64(std::istream& in, const std::string& what) {
  return std::bit_cast<double>(get_le<std::uint64_t>(in, what));
}
std::uint64_t get_u64(std::istream& in, const std::string& what) {
  return get_le<std::uint64_t>(in, what);
}

void put_f32_array(std::ostream& out, std::span<const float> values) {
  for (float v : values) put_f32(out, v);
}

void put_f64_array(std::ostream& out, std::span<const double> values) {
  for (double v : values) put_f64(out, v);
}

std::vector<float> get_f32_array(std::istream& in, std::size_t count, const std::string& what) {
  std::vector<float> values(count);
  if constexpr (std::endian::native == std::endian::little) {
    const auto bytes = static_cast<std::streamsize>(count * sizeof(float));
    in.read(reinterpret_cast<char*>(values.data()), bytes);
    if (in.gcount() != bytes) {
      throw TruncationError(what + ": expected " + std::to_string(count) + " floats, found " +
                            std::to_string(in.gcount() / 4));
    }
  } else {
    for (auto& v : values) v = get_f32(in, what);
  }
  return values;
}

std::vector<double> get_f64_array(std::istream& in, std::size_t count, const std::string& what) {
  std::vector<double> values(count);
  for (auto& v : values) v = get_f64(in, what);
  return values;
}

bool read_header_line(std::istream& in, std::string& line) {
  line.clear();
  char c;
  while (in.get(c)) {
    if (c == '\n') return true;
    line.push_back(c);
  }
  if (!line.empty()) throw FormatError("header line not LF-terminated: '" + line + "'");
  return false;
}

void expect_line(std::istream& in, int line_no, const std::string& expected, const std::string& source) {
  std::string line;
  if (!read_header_line(in, line) || line != expected) {
    throw FormatError(source + ": line " + std::to_string(line_no) + ": expected '" + expected +
                      "', got '" + line + "'");
  }
}

std::string expect_field(std::istream& in, int line_no, const std::string& key,
                         const std::string& source) {
  std::string line;
  const std::string prefix = key + ": ";
  if (!read_header_line(in, line) || line.rfind(prefix, 0) != 0 || line.size() == prefix.size()) {
    throw FormatError(source + ": line " + std::to_string(line_no) + ": expected '" + key +
                      ": ...', got '" + line + "'");
  }
  return line.substr(prefix.size());
}

std::size_t parse_size(const std::string& text, int line_no, const std::string& source) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw FormatError(source + ": line " + std::to_string(line_no) + ": not an integer: '" + text + "'");
  }
  return value;
}

double parse_real(const std::string& text, int line_no, const std::string& source) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw FormatError(source + ": line " + std::to_string(line_no) + ": not a number: '" + text + "'");
  }
  return value;
}

bool at_end(std::istream& in) { return in.peek() == std::char_traits<char>::eof(); }

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace metaseg::binary_io
