#include "metaseg/pipeline.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include "metaseg/errors.hpp"
#include "metaseg/parallel.hpp"

namespace metaseg {

FeatureTable extract_stat_features(const std::vector<DatasetStore>& datasets, const StatExtractOptions& options) {
  FeatureTable table;
  for (const auto& ds : datasets) {
    if (!ds.descriptor) throw ConfigError("missing task descriptor for dataset '" + ds.dataset_id + "'");
    const auto plan = sample_subsets(ds, options.subset_size, options.n_subsets, options.seed);

    std::set<std::size_t> used;
    for (const auto& subset : plan.subsets) used.insert(subset.begin(), subset.end());
    const std::vector<std::size_t> indices(used.begin(), used.end());
    std::vector<std::optional<statfeat::PerVolumeStats>> stats(ds.n_volumes());
    parallel_for(indices.size(), options.jobs, [&](std::size_t k) {
      const std::size_t idx = indices[k];
      try {
        const Volume v = read_volume(ds.volume_paths[idx]);
        stats[idx] = statfeat::volume_stats(v, options.hist_bins, options.mi_bins);
      } catch (const Error&) {
        rethrow_with_context("dataset '" + ds.dataset_id + "': ");
      }
    });

    std::vector<statfeat::PerVolumeStats> subset_stats;
    for (std::size_t s = 0; s < plan.subsets.size(); ++s) {
      subset_stats.clear();
      for (std::size_t idx : plan.subsets[s]) subset_stats.push_back(*stats[idx]);
      const auto x = statfeat::aggregate(subset_stats, ds.n_volumes());
      table.rows.push_back({ds.dataset_id, s, statfeat::append_task_features(x.values, *ds.descriptor)});
    }
  }
  return table;
}

DeepPostprocessing fit_deep_postprocessing(const deepfeat::TensorsByDataset& training, double alpha,
                                           const deepfeat::SelectorOptions& selector) {
  DeepPostprocessing post;
  post.binarizer = deepfeat::fit_binarizer(training, alpha);
  std::vector<std::vector<double>> bits;
  std::vector<std::string> labels;
  for (const auto& [id, tensors] : training) {
    for (const auto& t : tensors) {
      bits.push_back(deepfeat::binarize(t, post.binarizer));
      labels.push_back(id);
    }
  }
  post.selector = deepfeat::fit_selector(bits, labels, selector);
  return post;
}

std::vector<double> deep_vector(const DeepPostprocessing& post, const deepfeat::FeatureTensor& t,
                                const TaskSpecificFeatures& task) {
  const auto bits = deepfeat::binarize(t, post.binarizer);
  return statfeat::append_task_features(deepfeat::select(bits, post.selector), task);
}

deepfeat::TensorsByDataset group_tensors(std::vector<deepfeat::FeatureTensor> tensors) {
  deepfeat::TensorsByDataset grouped;
  for (auto& t : tensors) grouped[t.dataset_id].push_back(std::move(t));
  for (auto& [id, list] : grouped) {
    std::stable_sort(list.begin(), list.end(),
                     [](const auto& a, const auto& b) { return a.subset_id < b.subset_id; });
  }
  return grouped;
}

FeatureTable deep_feature_table(const DeepPostprocessing& post, const deepfeat::TensorsByDataset& tensors,
                                const std::map<std::string, TaskSpecificFeatures>& tasks) {
  FeatureTable table;
  for (const auto& [id, list] : tensors) {
    const auto task = tasks.find(id);
    if (task == tasks.end()) throw ConfigError("missing task descriptor for dataset '" + id + "'");
    for (const auto& t : list) table.rows.push_back({id, t.subset_id, deep_vector(post, t, task->second)});
  }
  return table;
}

}  // namespace metaseg
