#include "metaseg/task_features.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

#include "metaseg/csv.hpp"
#include "metaseg/errors.hpp"

namespace metaseg {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

void TaskSpecificFeatures::validate() const {
  const auto v = values();
  for (std::size_t i = 0; i < kCount; ++i) {
    if (!std::isfinite(v[i]) || v[i] < 0.0 || v[i] > 1.0) {
      throw DataError(std::string("task feature ") + kKeys[i] + " = " + csv::format_value(v[i]) +
                      " is outside [0, 1]");
    }
  }
}

TaskSpecificFeatures read_task_descriptor(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open task descriptor " + path.string());
  std::map<std::string, double> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool known = false;
    for (const char* k : TaskSpecificFeatures::kKeys) known = known || key == k;
    if (!known) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (seen.contains(key)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    seen[key] = csv::parse_double(value, path, line_no, key);
  }
  for (const char* k : TaskSpecificFeatures::kKeys) {
    if (!seen.contains(k)) throw FormatError(path.string() + ": missing key '" + std::string(k) + "'");
  }
  TaskSpecificFeatures t{seen["modality"], seen["location_dependent"], seen["sphere_shaped"],
                         seen["relative_size"], seen["multiple_objects"]};
  t.validate();
  return t;
}

void write_task_descriptor(const TaskSpecificFeatures& t, const std::filesystem::path& path) {
  t.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const auto v = t.values();
  for (std::size_t i = 0; i < TaskSpecificFeatures::kCount; ++i) {
    out << TaskSpecificFeatures::kKeys[i] << '=' << csv::format_value(v[i]) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::filesystem::path descriptor_path(const std::filesystem::path& dir, const std::string& dataset_id) {
  return dir / (dataset_id + ".task");
}

}  // namespace metaseg
