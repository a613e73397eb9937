#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace metaseg {

/// Subset-level meta-feature vectors grouped by dataset id.
using FeatureSet = std::map<std::string, std::vector<std::vector<double>>>;

struct FeatureRow {
  std::string dataset_id;
  std::size_t subset_id = 0;
  std::vector<double> values;
};

/// Rows of a feature CSV: `dataset_id,subset_id,f00,...`.
struct FeatureTable {
  std::vector<FeatureRow> rows;

  std::size_t width() const { return rows.empty() ? 0 : rows.front().values.size(); }
  /// Dataset ids in first-appearance order.
  std::vector<std::string> dataset_ids() const;
  FeatureSet by_dataset() const;
};

/// Column name for feature k: `f` followed by k, zero-padded to two digits.
std::string feature_column(std::size_t k);

FeatureTable read_features(const std::filesystem::path& path);
/// Values printed with 9 significant digits.
void write_features(const FeatureTable& table, const std::filesystem::path& path);

}  // namespace metaseg
