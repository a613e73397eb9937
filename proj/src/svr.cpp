#include "metaseg/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "metaseg/errors.hpp"

namespace metaseg::metalearn {

namespace {

constexpr double kTau = 1e-12;  // floor for non-positive curvature

// Dual variables a[0..2n): a[t] for t < n is alpha_t (y = +1), a[t + n] is
// alpha_t^* (y = -1). Q[s][t] = y_s y_t K(s mod n, t mod n).
class SmoSolver {
 public:
  SmoSolver(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& target, const SvrParams& p)
      : n_(kernel.rows()), l_(2 * n_), kernel_(kernel), c_(p.C), tol_(p.tol) {
    alpha_.assign(l_, 0.0);
    y_.assign(l_, 1.0);
    grad_.assign(l_, 0.0);
    for (Eigen::Index i = 0; i < n_; ++i) {
      y_[i + n_] = -1.0;
      grad_[i] = p.epsilon - target(i);
      grad_[i + n_] = p.epsilon + target(i);
    }
    max_iter_ = p.max_iterations != 0
                    ? p.max_iterations
                    : std::max<std::size_t>(10'000'000, 100 * static_cast<std::size_t>(n_));
  }

  void solve() {
    while (iterations_ < max_iter_) {
      Eigen::Index i = -1, j = -1;
      if (select_working_set(i, j)) {
        converged_ = true;
        return;
      }
      ++iterations_;
      update(i, j);
    }
    select_working_set_gap_only();
  }

  std::vector<double> coefficients() const {
    std::vector<double> coef(n_);
    for (Eigen::Index i = 0; i < n_; ++i) coef[i] = alpha_[i] - alpha_[i + n_];
    return coef;
  }

  double rho() const {
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    int n_free = 0;
    for (Eigen::Index t = 0; t < l_; ++t) {
      const double yg = y_[t] * grad_[t];
      if (at_upper(t)) {
        if (y_[t] < 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else if (at_lower(t)) {
        if (y_[t] > 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else {
        ++n_free;
        sum_free += yg;
      }
    }
    return n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
  }

  double gap() const { return gap_; }
  std::size_t iterations() const { return iterations_; }
  bool converged() const { return converged_; }

 private:
  double q(Eigen::Index s, Eigen::Index t) const { return y_[s] * y_[t] * kernel_(s % n_, t % n_); }
  bool at_upper(Eigen::Index t) const { return alpha_[t] >= c_; }
  bool at_lower(Eigen::Index t) const { return alpha_[t] <= 0.0; }

  // Returns true when the optimality gap is within tolerance.
  bool select_working_set(Eigen::Index& out_i, Eigen::Index& out_j) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmax2 = -std::numeric_limits<double>::infinity();
    Eigen::Index gmax_idx = -1;
    for (Eigen::Index t = 0; t < l_; ++t) {
      if (y_[t] > 0) {
        if (!at_upper(t) && -grad_[t] >= gmax) {
          gmax = -grad_[t];
          gmax_idx = t;
        }
      } else if (!at_lower(t) && grad_[t] >= gmax) {
        gmax = grad_[t];
        gmax_idx = t;
      }
    }
    const Eigen::Index i = gmax_idx;
    double obj_min = std::numeric_limits<double>::infinity();
    Eigen::Index gmin_idx = -1;
    for (Eigen::Index j = 0; j < l_; ++j) {
      if (y_[j] > 0) {
        if (!at_lower(j)) {
          const double grad_diff = gmax + grad_[j];
          gmax2 = std::max(gmax2, grad_[j]);
          if (i != -1 && grad_diff > 0.0) {
            double quad = 2.0 - 2.0 * y_[i] * q(i, j);
            if (quad <= 0.0) quad = kTau;
            const double obj = -(grad_diff * grad_diff) / quad;
            if (obj <= obj_min) {
              obj_min = obj;
              gmin_idx = j;
            }
          }
        }
      } else if (!at_upper(j)) {
        const double grad_diff = gmax - grad_[j];
        gmax2 = std::max(gmax2, -grad_[j]);
        if (i != -1 && grad_diff > 0.0) {
          double quad = 2.0 + 2.0 * y_[i] * q(i, j);
          if (quad <= 0.0) quad = kTau;
          const double obj = -(grad_diff * grad_diff) / quad;
          if (obj <= obj_min) {
            obj_min = obj;
            gmin_idx = j;
          }
        }
      }
    }
    gap_ = gmax + gmax2;
    if (gap_ < tol_ || gmin_idx == -1) {
      if (gap_ < 0.0 || !std::isfinite(gap_)) gap_ = 0.0;
      return true;
    }
    out_i = i;
    out_j = gmin_idx;
    return false;
  }

  void select_working_set_gap_only() {
    Eigen::Index i, j;
    converged_ = select_working_set(i, j);
  }

  // Two-variable analytic step with box clipping (K(t, t) = 1 for RBF).
  void update(Eigen::Index i, Eigen::Index j) {
    const double old_ai = alpha_[i];
    const double old_aj = alpha_[j];
    const double qij = q(i, j);
    if (y_[i] != y_[j]) {
      double quad = 2.0 + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad_[i] - grad_[j]) / quad;
      const double diff = alpha_[i] - alpha_[j];
      alpha_[i] += delta;
      alpha_[j] += delta;
      if (diff > 0.0) {
        if (alpha_[j] < 0.0) {
          alpha_[j] = 0.0;
          alpha_[i] = diff;
        }
      } else if (alpha_[i] < 0.0) {
        alpha_[i] = 0.0;
        alpha_[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha_[i] > c_) {
          alpha_[i] = c_;
          alpha_[j] = c_ - diff;
        }
      } else if (alpha_[j] > c_) {
        alpha_[j] = c_;
        alpha_[i] = c_ + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad_[i] - grad_[j]) / quad;
      const double sum = alpha_[i] + alpha_[j];
      alpha_[i] -= delta;
      alpha_[j] += delta;
      if (sum > c_) {
        if (alpha_[i] > c_) {
          alpha_[i] = c_;
          alpha_[j] = sum - c_;
        }
      } else if (alpha_[j] < 0.0) {
        alpha_[j] = 0.0;
        alpha_[i] = sum;
      }
      if (sum > c_) {
        if (alpha_[j] > c_) {
          alpha_[j] = c_;
          alpha_[i] = sum - c_;
        }
      } else if (alpha_[i] < 0.0) {
        alpha_[i] = 0.0;
        alpha_[j] = sum;
      }
    }
    const double dai = alpha_[i] - old_ai;
    const double daj = alpha_[j] - old_aj;
    for (Eigen::Index t = 0; t < l_; ++t) grad_[t] += q(i, t) * dai + q(j, t) * daj;
  }

  Eigen::Index n_;
  Eigen::Index l_;
  const Eigen::MatrixXd& kernel_;
  double c_;
  double tol_;
  std::size_t max_iter_ = 0;
  std::size_t iterations_ = 0;
  bool converged_ = false;
  double gap_ = 0.0;
  std::vector<double> alpha_;
  std::vector<double> y_;
  std::vector<double> grad_;
};

}  // namespace

double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v,
                  double gamma) {
  return std::exp(-gamma * (u - v).squaredNorm());
}

double scale_gamma(const Eigen::MatrixXd& x) {
  if (x.size() == 0) throw EmptyDataError("scale_gamma: empty matrix");
  const double mean = x.mean();
  const double var = (x.array() - mean).square().mean();
  if (!(var > 0.0)) return 1.0;
  return 1.0 / (static_cast<double>(x.cols()) * var);
}

SvrModel svr_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SvrParams& params) {
  if (x.rows() == 0) throw EmptyDataError("svr_fit: no training rows");
  if (x.rows() != y.size()) throw ShapeError("svr_fit: one target per row required");
  if (!x.allFinite() || !y.allFinite()) throw DataError("svr_fit: non-finite inputs");
  if (!(params.C > 0.0) || !(params.epsilon >= 0.0) || !(params.tol > 0.0)) {
    throw ConfigError("svr_fit: C and tol must be positive, epsilon non-negative");
  }

  SvrModel m;
  m.C = params.C;
  m.epsilon = params.epsilon;
  m.gamma = params.gamma.value_or(scale_gamma(x));
  if (!(m.gamma > 0.0)) throw ConfigError("svr_fit: gamma must be positive");
  m.n_features = x.cols();

  const Eigen::Index n = x.rows();
  Eigen::MatrixXd kernel(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    kernel(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      kernel(i, j) = kernel(j, i) = rbf_kernel(x.row(i).transpose(), x.row(j).transpose(), m.gamma);
    }
  }

  SmoSolver solver(kernel, y, params);
  solver.solve();
  const auto coef = solver.coefficients();
  m.bias = -solver.rho();
  m.kkt_gap = solver.gap();
  m.iterations = solver.iterations();
  m.converged = solver.converged();

  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (coef[i] != 0.0) support.push_back(i);
  }
  m.support_x.resize(static_cast<Eigen::Index>(support.size()), x.cols());
  m.dual_coef.resize(static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) {
    m.support_x.row(static_cast<Eigen::Index>(k)) = x.row(support[k]);
    m.dual_coef(static_cast<Eigen::Index>(k)) = coef[support[k]];
  }
  return m;
}

double svr_decision(const SvrModel& m, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != m.n_features) {
    throw ShapeError("svr: input has " + std::to_string(x.size()) + " features, model expects " +
                     std::to_string(m.n_features));
  }
  double f = m.bias;
  for (Eigen::Index k = 0; k < m.dual_coef.size(); ++k) {
    f += m.dual_coef(k) * rbf_kernel(m.support_x.row(k).transpose(), x, m.gamma);
  }
  return f;
}

double svr_predict(const SvrModel& m, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return std::clamp(svr_decision(m, x), 0.0, 1.0);
}

}  // namespace metaseg::metalearn
