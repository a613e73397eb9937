#include "metaseg/feature_table.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "metaseg/csv.hpp"
#include "metaseg/errors.hpp"

namespace metaseg {

std::vector<std::string> FeatureTable::dataset_ids() const {
  std::vector<std::string> ids;
  for (const auto& r : rows) {
    if (std::find(ids.begin(), ids.end(), r.dataset_id) == ids.end()) ids.push_back(r.dataset_id);
  }
  return ids;
}

FeatureSet FeatureTable::by_dataset() const {
  FeatureSet set;
  for (const auto& r : rows) set[r.dataset_id].push_back(r.values);
  return set;
}

std::string feature_column(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "f%02zu", k);
  return buf;
}

FeatureTable read_features(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  if (table.header.size() < 3 || table.header[0] != "dataset_id" || table.header[1] != "subset_id") {
    throw FormatError(path.string() + ":1: expected header 'dataset_id,subset_id,f00,...'");
  }
  for (std::size_t k = 2; k < table.header.size(); ++k) {
    if (table.header[k] != feature_column(k - 2)) {
      throw FormatError(path.string() + ":1: column " + std::to_string(k + 1) + " should be '" +
                        feature_column(k - 2) + "', got '" + table.header[k] + "'");
    }
  }
  FeatureTable out;
  out.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    FeatureRow fr;
    fr.dataset_id = row.fields[0];
    if (fr.dataset_id.empty()) {
      throw FormatError(path.string() + ":" + std::to_string(row.line) + ": empty dataset_id");
    }
    fr.subset_id = csv::parse_count(row.fields[1], path, row.line, "subset_id");
    fr.values.reserve(row.fields.size() - 2);
    for (std::size_t k = 2; k < row.fields.size(); ++k) {
      fr.values.push_back(csv::parse_double(row.fields[k], path, row.line, table.header[k]));
    }
    out.rows.push_back(std::move(fr));
  }
  return out;
}

void write_features(const FeatureTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const std::size_t width = table.width();
  if (width == 0) throw EmptyDataError("write_features: no feature rows");
  out << "dataset_id,subset_id";
  for (std::size_t k = 0; k < width; ++k) out << ',' << feature_column(k);
  out << '\n';
  for (const auto& r : table.rows) {
    if (r.values.size() != width) throw ShapeError("write_features: ragged feature rows");
    out << r.dataset_id << ',' << r.subset_id;
    for (double v : r.values) out << ',' << csv::format_value(v);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace metaseg
