#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "metaseg/deepfeat.hpp"
#include "metaseg/feature_table.hpp"
#include "metaseg/pipeline.hpp"
#include "metaseg/regressor_bank.hpp"
#include "metaseg/score_matrix.hpp"
#include "metaseg/task_features.hpp"

namespace metaseg::evaluation {

/// (1/n) sum |y - yhat|.
double mae(std::span<const double> y, std::span<const double> yhat);

/// sum |y - yhat| / sum |y - ybar|, where ybar is the training-mean baseline.
double nmae(std::span<const double> y, std::span<const double> yhat, std::span<const double> ybar);

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

enum class SplitMode { kExhaustive, kRandom };

SplitMode parse_split_mode(const std::string& name);
std::string split_mode_name(SplitMode mode);

struct Fold {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  bool operator==(const Fold&) const = default;
};

struct SplitPlan {
  std::vector<Fold> folds;
  SplitMode mode = SplitMode::kRandom;
  std::uint64_t seed = 0;
  bool operator==(const SplitPlan&) const = default;
};

/// Ids are sorted first. Exhaustive mode lists every test set of `test_size`
/// ids in lexicographic order, training on the first `train_size` remaining
/// ids. Random mode draws `n_folds` distinct test sets; when
/// n_folds * test_size >= N the plan is redrawn until every id is tested at
/// least once. Ids inside a fold are sorted.
SplitPlan make_splits(std::vector<std::string> dataset_ids, std::size_t train_size, std::size_t test_size,
                      SplitMode mode, std::size_t n_folds, std::uint64_t seed);

/// Meta-features fixed before cross-validation (statistical features).
struct FixedFeatures {
  FeatureSet features;
};

/// Deep tensors whose binarizer and selector are refitted on every fold's
/// training datasets.
struct DeepFeatures {
  deepfeat::TensorsByDataset tensors;
  std::map<std::string, TaskSpecificFeatures> tasks;
  double alpha = deepfeat::kDefaultAlpha;
  deepfeat::SelectorOptions selector;
};

using FeatureSource = std::variant<FixedFeatures, DeepFeatures>;

struct PredictionRecord {
  std::size_t fold = 0;
  std::string dataset_id;
  std::string method_id;
  double truth = 0.0;
  double predicted = 0.0;
  double baseline = 0.0;  // training-mean score of the method in this fold
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single sample
  std::size_t count = 0;
};

/// Per-dataset rows pool |y - yhat| over every (fold, method) where the
/// dataset was tested; per-method rows pool over every (fold, test dataset).
/// Overall MAE and NMAE are computed per fold, then summarised over folds.
struct EvalReport {
  std::string learner;
  std::size_t n_folds = 0;
  std::vector<std::string> dataset_ids;  // rows of the per-dataset table
  std::vector<Stat> per_dataset;
  std::vector<std::string> method_ids;  // rows of the per-method table
  std::vector<Stat> per_method;
  Stat overall_mae;
  Stat overall_nmae;
  Stat method_rank_corr;
  Stat task_rank_corr;
  /// Spearman rho over methods for every (fold, test dataset), fold-major.
  std::vector<double> rank_corr;
  std::vector<PredictionRecord> predictions;
};

/// Everything fitted in one fold, exposed for inspection.
struct FoldArtifacts {
  const metalearn::RegressorBank& bank;
  const std::optional<DeepPostprocessing>& postprocessing;
};

struct CrossvalOptions {
  metalearn::LearnerKind kind = metalearn::LearnerKind::kSvr;
  metalearn::BankConfig bank;
  std::uint64_t seed = 0;
  /// Folds evaluated concurrently; results are merged in fold order.
  std::size_t jobs = 1;
  std::function<void(std::size_t fold, const FoldArtifacts&)> observer;
};

/// Feature vectors of one fold. Test vectors come from models fitted on the
/// training datasets only.
struct FoldFeatures {
  FeatureSet train;
  FeatureSet test;
  std::optional<DeepPostprocessing> postprocessing;
};

FoldFeatures prepare_fold_features(const FeatureSource& source, const Fold& fold);

/// Builds the report from prediction records. Dataset and method rows follow
/// the given orders, restricted to ids that occur in the records.
EvalReport summarize(const std::vector<PredictionRecord>& records, const std::vector<std::string>& dataset_order,
                     const std::vector<std::string>& method_order, const std::string& learner);

EvalReport run_crossval(const FeatureSource& source, const ScoreMatrix& scores, const SplitPlan& splits,
                        const CrossvalOptions& options);

/// Writes per_dataset.csv, per_method.csv, summary.csv, predictions.csv and
/// report.txt into `dir` (created if needed).
void emit_report(const EvalReport& report, const std::filesystem::path& dir);

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

/// `m ± s` with two decimals.
std::string format_pm(const Stat& s);

}  // namespace metaseg::evaluation
