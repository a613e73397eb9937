#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace metaseg {

/// Dice score of every method on every dataset. Complete: no missing cells.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  /// `scores` is row-major, dataset by method. Validates uniqueness of ids and
  /// that every cell lies in [0, 1].
  ScoreMatrix(std::vector<std::string> dataset_ids, std::vector<std::string> method_ids,
              std::vector<double> scores);

  const std::vector<std::string>& dataset_ids() const { return dataset_ids_; }
  const std::vector<std::string>& method_ids() const { return method_ids_; }
  std::size_t n_datasets() const { return dataset_ids_.size(); }
  std::size_t n_methods() const { return method_ids_.size(); }

  bool has_dataset(const std::string& id) const;
  std::size_t dataset_index(const std::string& id) const;  // throws MissingLabelError
  double at(std::size_t dataset, std::size_t method) const { return scores_[dataset * n_methods() + method]; }
  double at(const std::string& dataset, std::size_t method) const { return at(dataset_index(dataset), method); }

  /// Sub-matrix with the listed datasets only, in the given order.
  ScoreMatrix restrict_to(const std::vector<std::string>& dataset_ids) const;

  bool operator==(const ScoreMatrix&) const = default;

 private:
  std::vector<std::string> dataset_ids_;
  std::vector<std::string> method_ids_;
  std::vector<double> scores_;
};

/// Reads the `dataset_id,method_id,dice` CSV. Dataset and method order follow
/// first appearance. Duplicate or missing cells raise errors naming the cell;
/// malformed values name the line.
ScoreMatrix read_scores(const std::filesystem::path& path);
void write_scores(const ScoreMatrix& s, const std::filesystem::path& path);

/// Per-method mean score over the listed datasets.
std::vector<double> training_means(const ScoreMatrix& s, const std::vector<std::string>& dataset_ids);

}  // namespace metaseg
