#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "metaseg/deepfeat.hpp"
#include "metaseg/score_matrix.hpp"
#include "metaseg/task_features.hpp"
#include "metaseg/volume_io.hpp"

namespace metaseg::synthetic {

/// A generated benchmark whose Dice scores are a known function of dataset
/// statistics, for end-to-end checks of the meta-learning pipeline.
struct SuiteOptions {
  std::size_t n_datasets = 10;
  std::size_t volumes_per_dataset = 30;
  Dims dims{16, 16, 8};
  std::size_t n_methods = 6;
  double label_noise = 0.02;
  std::uint64_t seed = 1;
};

struct Suite {
  std::vector<DatasetStore> datasets;  // descriptors attached
  ScoreMatrix scores;
  /// (u1, u2) of every dataset; they also drive the deep tensors.
  std::map<std::string, std::array<double, 2>> latent;
};

/// Dataset d has a level factor a_d and a noise factor b_d in [0, 1]; datasets
/// come in pairs with nearby factors. Volumes are level 50 + 100 a_d plus a
/// smooth in-plane field of amplitude 50 plus Gaussian noise whose level puts
/// the adjacent-slice correlation near 0.95 - 0.65 b_d. Dice of method j is
/// 0.1 + 0.8 sigmoid(6 (t - 0.5)) with t = w_j u1 + (1 - w_j) u2, plus
/// N(0, label_noise), clamped to [0, 1]. Here u1, u2 are the min-max normalised dataset means
/// of voxel mean and adjacent-slice correlation and w_j = j / (n_methods - 1).
///
/// Writes volumes/<id>/<k>.mlvol, manifest.csv, descriptors/<id>.task and
/// scores.csv under `dir`.
Suite write_suite(const std::filesystem::path& dir, const SuiteOptions& options = {});

struct TensorOptions {
  std::size_t channels = 512;
  std::size_t informative = 48;  // channels with dataset-specific patterns
  std::size_t subsets_per_dataset = 20;
  std::uint64_t seed = 2;
};

/// One tensor per (dataset, subset). The first `informative` channels carry a
/// dataset-specific spatial pattern whose mean tracks u1 (even channels) or
/// u2 (odd channels); the rest share one pattern across datasets. Writes
/// <dir>/<id>/<subset>.mlten and returns the tensors grouped by dataset.
deepfeat::TensorsByDataset write_tensors(const std::filesystem::path& dir,
                                         const std::map<std::string, std::array<double, 2>>& latent,
                                         const TensorOptions& options = {});

}  // namespace metaseg::synthetic
