#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "metaseg/deepfeat.hpp"
#include "metaseg/rng.hpp"
#include "metaseg/score_matrix.hpp"
#include "metaseg/feature_table.hpp"

namespace fixture {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "metaseg");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& p, const std::string& text);
std::string read_text(const std::filesystem::path& p);
std::vector<char> read_bytes(const std::filesystem::path& p);

/// Byte-for-byte comparison of every regular file under two directories.
bool same_tree(const std::filesystem::path& a, const std::filesystem::path& b, std::string* first_difference = nullptr);

/// Tensor with every map of channel c filled from `value(c, pixel)`.
template <class F>
metaseg::deepfeat::FeatureTensor tensor(const std::string& dataset, std::size_t subset, std::size_t channels, F value) {
  metaseg::deepfeat::FeatureTensor t;
  t.channels = channels;
  t.dataset_id = dataset;
  t.subset_id = subset;
  t.maps.resize(channels * metaseg::deepfeat::kMapSize);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < metaseg::deepfeat::kMapSize; ++p) {
      t.maps[c * metaseg::deepfeat::kMapSize + p] = static_cast<float>(value(c, p));
    }
  }
  return t;
}

/// Random features for `n_datasets` datasets with `subsets` vectors of width q each.
metaseg::FeatureSet random_features(metaseg::Rng& rng, std::size_t n_datasets, std::size_t subsets, std::size_t q);

/// Random scores for ds00.. x m00.. in [0.05, 0.95].
metaseg::ScoreMatrix random_scores(metaseg::Rng& rng, std::size_t n_datasets, std::size_t n_methods);

std::string dataset_id(std::size_t i);

}  // namespace fixture
