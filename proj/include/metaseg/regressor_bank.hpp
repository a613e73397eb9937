#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "metaseg/feature_table.hpp"
#include "metaseg/mlp.hpp"
#include "metaseg/score_matrix.hpp"
#include "metaseg/standardizer.hpp"
#include "metaseg/svr.hpp"

namespace metaseg::metalearn {

/// `mean` always predicts the method's training-mean score; it is the
/// reference learner whose NMAE is 1 by construction.
enum class LearnerKind { kSvr, kMlp, kMean };

LearnerKind parse_learner_kind(const std::string& name);
std::string learner_name(LearnerKind kind);

struct MeanModel {
  double value = 0.0;
  bool operator==(const MeanModel&) const = default;
};

using Regressor = std::variant<SvrModel, MlpModel, MeanModel>;

struct BankConfig {
  SvrParams svr;
  MlpConfig mlp;
  std::size_t jobs = 1;
};

/// One regressor per method, all sharing the standardizer.
struct RegressorBank {
  LearnerKind kind = LearnerKind::kSvr;
  std::vector<std::string> method_ids;
  std::vector<Regressor> models;
  Standardizer standardizer;

  Eigen::Index inputs() const { return standardizer.size(); }
};

/// Fits the standardizer on every training subset vector, then trains one
/// regressor per method with each subset vector of dataset i labelled y_ij.
/// Training datasets are the keys of `features`. Per-method seeds are
/// derive_seed(seed, method_id), so results do not depend on `jobs`.
RegressorBank train_bank(const FeatureSet& features, const ScoreMatrix& scores, LearnerKind kind,
                         std::uint64_t seed, const BankConfig& config = {});

/// Clipped prediction of one method's regressor for an already standardized vector.
double predict_one(const RegressorBank& bank, std::size_t method, const Eigen::VectorXd& standardized);

/// Per-method mean of per-subset predictions, clipped to [0, 1].
std::vector<double> predict_dataset(const RegressorBank& bank, const std::vector<std::vector<double>>& vectors);

void save_bank(const RegressorBank& bank, const std::filesystem::path& path);
RegressorBank load_bank(const std::filesystem::path& path);

}  // namespace metaseg::metalearn
