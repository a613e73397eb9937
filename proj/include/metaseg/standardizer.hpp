#pragma once

#include <Eigen/Core>

namespace metaseg::metalearn {

/// Column-wise z-scoring fitted on training rows.
struct Standardizer {
  Eigen::VectorXd means;
  Eigen::VectorXd stds;  // sample standard deviations; entries < 1e-12 replaced by 1

  Eigen::Index size() const { return means.size(); }
  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd transform(const Eigen::VectorXd& x) const;
  bool operator==(const Standardizer& other) const;
};

Standardizer fit_standardizer(const Eigen::MatrixXd& x);

}  // namespace metaseg::metalearn
