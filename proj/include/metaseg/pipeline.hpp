#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "metaseg/deepfeat.hpp"
#include "metaseg/feature_table.hpp"
#include "metaseg/statfeat.hpp"
#include "metaseg/task_features.hpp"
#include "metaseg/volume_io.hpp"

namespace metaseg {

struct StatExtractOptions {
  std::size_t subset_size = 20;
  std::size_t n_subsets = 100;
  std::size_t hist_bins = statfeat::kDefaultHistBins;
  std::size_t mi_bins = statfeat::kDefaultMiBins;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

/// One 38-value row per (dataset, subset): the 33 statistical features of the
/// subset followed by the dataset's task features. Each referenced volume is
/// read and summarised once. Every dataset needs an attached descriptor.
FeatureTable extract_stat_features(const std::vector<DatasetStore>& datasets, const StatExtractOptions& options);

/// Binarizer and selector fitted together on training tensors.
struct DeepPostprocessing {
  deepfeat::BinarizationModel binarizer;
  deepfeat::SelectionModel selector;
  bool operator==(const DeepPostprocessing&) const = default;
};

DeepPostprocessing fit_deep_postprocessing(const deepfeat::TensorsByDataset& training, double alpha,
                                           const deepfeat::SelectorOptions& selector = {});

/// select(binarize(t)) followed by the task features.
std::vector<double> deep_vector(const DeepPostprocessing& post, const deepfeat::FeatureTensor& t,
                                const TaskSpecificFeatures& task);

/// Groups tensors by dataset id; within a dataset tensors are ordered by subset id.
deepfeat::TensorsByDataset group_tensors(std::vector<deepfeat::FeatureTensor> tensors);

/// Applies `post` to every tensor and returns feature rows in dataset/subset order.
FeatureTable deep_feature_table(const DeepPostprocessing& post, const deepfeat::TensorsByDataset& tensors,
                                const std::map<std::string, TaskSpecificFeatures>& tasks);

}  // namespace metaseg
