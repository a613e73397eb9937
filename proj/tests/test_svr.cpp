#include <doctest.h>

#include <cmath>

#include "metaseg/errors.hpp"
#include "metaseg/rng.hpp"
#include "metaseg/svr.hpp"
#include "support/oracles.hpp"

using namespace metaseg;
using namespace metaseg::metalearn;

namespace {

struct Problem {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Problem random_problem(Rng& rng) {
  const auto n = static_cast<Eigen::Index>(2 + rng.below(4));
  const auto q = static_cast<Eigen::Index>(1 + rng.below(2));
  Problem p{Eigen::MatrixXd(n, q), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) p.x(i, j) = rng.uniform(-2.0, 2.0);
    p.y(i) = rng.uniform(0.0, 1.0);
  }
  return p;
}

std::vector<std::vector<double>> rows(const Eigen::MatrixXd& x) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) out[static_cast<std::size_t>(i)].push_back(x(i, j));
  return out;
}

std::vector<double> as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void check_feasible(const SvrModel& m, std::size_t n) {
  CHECK(m.converged);
  for (Eigen::Index i = 0; i < m.dual_coef.size(); ++i) CHECK(std::abs(m.dual_coef(i)) <= m.C + 1e-9);
  CHECK(std::abs(m.dual_coef.sum()) <= 1e-6 * m.C * static_cast<double>(n));
}

}  // namespace

TEST_CASE("rbf kernel and scale gamma") {
  Eigen::VectorXd u(2), v(2);
  u << 0, 0;
  v << 1, 2;
  CHECK(rbf_kernel(u, v, 0.5) == doctest::Approx(std::exp(-2.5)).epsilon(1e-15));
  Eigen::MatrixXd x(2, 2);
  x << -1, 1, 1, -1;  // every entry has variance 1
  CHECK(scale_gamma(x) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(scale_gamma(Eigen::MatrixXd::Constant(3, 2, 4.0)) == 1.0);
}

TEST_CASE("constant targets give a constant model") {
  Eigen::MatrixXd x(4, 1);
  x << 0, 1, 2, 3;
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(4, 0.37);
  const auto m = svr_fit(x, y);
  CHECK(m.dual_coef.size() == 0);
  CHECK(m.bias == doctest::Approx(0.37).epsilon(1e-12));
  Eigen::VectorXd probe(1);
  probe << 17.0;
  CHECK(svr_predict(m, probe) == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("single point") {
  Eigen::MatrixXd x(1, 1);
  x << 0.3;
  Eigen::VectorXd y(1);
  y << 0.7;
  const auto m = svr_fit(x, y);
  CHECK(svr_predict(m, x.row(0).transpose()) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("three-point problem matches the literal dual grid") {
  Eigen::MatrixXd x(3, 1);
  x << 0, 1, 2;
  Eigen::VectorXd y(3);
  y << 0.2, 0.5, 0.8;
  const auto m = svr_fit(x, y);
  check_feasible(m, 3);
  const auto k = oracle::rbf_gram(rows(x), m.gamma);
  const auto grid = oracle::svr_grid(k, as_vector(y), 1.0, 0.1, 1e-4);
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(std::abs(svr_decision(m, x.row(i).transpose()) - grid.train_pred[static_cast<std::size_t>(i)]) <= 1e-4);
    CHECK(std::abs(svr_predict(m, x.row(i).transpose()) - grid.train_pred[static_cast<std::size_t>(i)]) <= 1e-4);
  }
}

TEST_CASE("two-point problems match the literal dual grid") {
  Rng rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd x(2, 1);
    x << rng.uniform(-1, 1), rng.uniform(-1, 1);
    Eigen::VectorXd y(2);
    y << rng.uniform(), rng.uniform();
    const auto m = svr_fit(x, y);
    const auto k = oracle::rbf_gram(rows(x), m.gamma);
    const auto grid = oracle::svr_grid(k, as_vector(y), 1.0, 0.1, 1e-4);
    for (Eigen::Index i = 0; i < 2; ++i)
      CHECK(std::abs(svr_decision(m, x.row(i).transpose()) - grid.train_pred[static_cast<std::size_t>(i)]) <= 1e-4);
  }
}

TEST_CASE("random problems match both oracles") {
  Rng rng(1234);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_problem(rng);
    // The default tol of 1e-3 bounds the KKT violation, not the prediction
    // error; a tighter stop is needed for agreement at 1e-4.
    SvrParams params;
    params.tol = 1e-5;
    const auto m = svr_fit(p.x, p.y, params);
    const auto n = static_cast<std::size_t>(p.x.rows());
    check_feasible(m, n);
    const auto k = oracle::rbf_gram(rows(p.x), m.gamma);
    const auto exact = oracle::svr_active_set(k, as_vector(p.y), m.C, m.epsilon);
    const auto grid = oracle::svr_grid_refined(k, as_vector(p.y), m.C, m.epsilon, 1e-6);
    for (std::size_t i = 0; i < n; ++i) {
      const double f = svr_decision(m, p.x.row(static_cast<Eigen::Index>(i)).transpose());
      INFO("trial " << trial << " n " << n << " point " << i);
      CHECK(std::abs(f - exact.train_pred[i]) <= 1e-4);
      CHECK(std::abs(f - grid.train_pred[i]) <= 1e-4);
    }
  }
}

TEST_CASE("epsilon tube holds for linear data with large C") {
  Eigen::MatrixXd x(6, 1);
  x << -1, -0.6, -0.2, 0.2, 0.6, 1.0;
  Eigen::VectorXd y = 0.5 + 0.1 * x.col(0).array();
  SvrParams p;
  p.C = 10.0;
  const auto m = svr_fit(x, y, p);
  for (Eigen::Index i = 0; i < 6; ++i)
    CHECK(std::abs(svr_decision(m, x.row(i).transpose()) - y(i)) <= p.epsilon + p.tol);
}

TEST_CASE("predictions are clipped to [0, 1]") {
  SvrModel m;
  m.support_x = Eigen::MatrixXd::Zero(1, 1);
  m.dual_coef = Eigen::VectorXd::Constant(1, 1.0);
  m.bias = 0.07;
  m.gamma = 1.0;
  m.n_features = 1;
  const Eigen::VectorXd at = Eigen::VectorXd::Zero(1);
  CHECK(svr_decision(m, at) == doctest::Approx(1.07));
  CHECK(svr_predict(m, at) == 1.0);
  m.bias = -1.5;
  CHECK(svr_predict(m, at) == 0.0);
  CHECK_THROWS_AS(svr_predict(m, Eigen::VectorXd::Zero(2)), ShapeError);
}

TEST_CASE("invalid inputs") {
  Eigen::MatrixXd x(2, 1);
  x << 0, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(svr_fit(x, Eigen::VectorXd::Zero(2)), DataError);
  CHECK_THROWS_AS(svr_fit(Eigen::MatrixXd(0, 1), Eigen::VectorXd(0)), EmptyDataError);
  SvrParams bad;
  bad.C = 0.0;
  CHECK_THROWS_AS(svr_fit(Eigen::MatrixXd::Zero(2, 1), Eigen::VectorXd::Zero(2), bad), ConfigError);
}

TEST_CASE("larger fits stay feasible and deterministic") {
  Rng rng(5);
  Eigen::MatrixXd x(120, 4);
  Eigen::VectorXd y(120);
  for (Eigen::Index i = 0; i < 120; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) x(i, j) = rng.normal();
    y(i) = std::clamp(0.5 + 0.2 * std::sin(x(i, 0)) + 0.05 * rng.normal(), 0.0, 1.0);
  }
  const auto a = svr_fit(x, y);
  const auto b = svr_fit(x, y);
  check_feasible(a, 120);
  CHECK(a.kkt_gap <= 1e-3);
  CHECK(a.dual_coef == b.dual_coef);
  CHECK(a.bias == b.bias);
}
