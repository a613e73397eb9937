#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <optional>

namespace metaseg::metalearn {

/// Epsilon-SVR settings. gamma unset selects the "scale" heuristic
/// 1 / (q * Var(X)), with Var over every entry of the training matrix.
struct SvrParams {
  double C = 1.0;
  double epsilon = 0.1;
  std::optional<double> gamma;
  double tol = 1e-3;
  /// Iteration cap; 0 selects max(10^7, 100 n).
  std::size_t max_iterations = 0;
  bool operator==(const SvrParams&) const = default;
};

struct SvrModel {
  Eigen::MatrixXd support_x;  // one standardized row per support vector
  Eigen::VectorXd dual_coef;  // alpha_i - alpha_i^*
  double bias = 0.0;
  double gamma = 1.0;
  double C = 1.0;
  double epsilon = 0.1;
  Eigen::Index n_features = 0;
  // Solver diagnostics; not serialized.
  double kkt_gap = 0.0;
  std::size_t iterations = 0;
  bool converged = true;
};

double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v,
                  double gamma);

/// gamma = 1 / (q * Var(X)), or 1 when the variance is zero.
double scale_gamma(const Eigen::MatrixXd& x);

/// Solves the epsilon-insensitive dual by SMO with second-order working-set
/// selection. Stops when the maximal KKT violation m(a) - M(a) <= tol.
SvrModel svr_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SvrParams& params = {});

/// Kernel expansion value without clipping.
double svr_decision(const SvrModel& m, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Kernel expansion value clipped to [0, 1].
double svr_predict(const SvrModel& m, const Eigen::Ref<const Eigen::VectorXd>& x);

}  // namespace metaseg::metalearn
