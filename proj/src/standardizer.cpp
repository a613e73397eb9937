#include "metaseg/standardizer.hpp"

#include <cmath>

#include "metaseg/errors.hpp"

namespace metaseg::metalearn {

Standardizer fit_standardizer(const Eigen::MatrixXd& x) {
  if (x.rows() == 0 || x.cols() == 0) throw EmptyDataError("fit_standardizer: empty feature matrix");
  if (!x.allFinite()) throw DataError("fit_standardizer: non-finite feature value");
  Standardizer s;
  s.means = x.colwise().mean().transpose();
  s.stds = Eigen::VectorXd::Ones(x.cols());
  if (x.rows() > 1) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double ss = (x.col(c).array() - s.means(c)).square().sum();
      const double sd = std::sqrt(ss / static_cast<double>(x.rows() - 1));
      s.stds(c) = sd < 1e-12 ? 1.0 : sd;
    }
  }
  return s;
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& x) const {
  if (x.cols() != size()) {
    throw ShapeError("standardizer expects " + std::to_string(size()) + " features, got " +
                     std::to_string(x.cols()));
  }
  return (x.rowwise() - means.transpose()).array().rowwise() / stds.transpose().array();
}

Eigen::VectorXd Standardizer::transform(const Eigen::VectorXd& x) const {
  if (x.size() != size()) {
    throw ShapeError("standardizer expects " + std::to_string(size()) + " features, got " +
                     std::to_string(x.size()));
  }
  return (x - means).array() / stds.array();
}

bool Standardizer::operator==(const Standardizer& other) const {
  return means.size() == other.means.size() && means == other.means && stds == other.stds;
}

}  // namespace metaseg::metalearn
