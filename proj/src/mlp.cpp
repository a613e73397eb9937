#include "metaseg/mlp.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "metaseg/errors.hpp"
#include "metaseg/rng.hpp"

namespace metaseg::metalearn {

namespace {

Eigen::MatrixXd he_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(cols));
  Eigen::MatrixXd w(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = rng.uniform(-limit, limit);
  return w;
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

void check_batch(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() == 0) throw EmptyDataError("mlp: empty batch");
  if (x.cols() != m.inputs()) {
    throw ShapeError("mlp: input has " + std::to_string(x.cols()) + " features, model expects " +
                     std::to_string(m.inputs()));
  }
  if (y.size() != x.rows()) throw ShapeError("mlp: one target per row required");
}

LossAndGradients backprop(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const DropoutMask* mask) {
  check_batch(m, x, y);
  const Eigen::Index batch = x.rows();
  if (mask != nullptr && (mask->hidden1.rows() != batch || mask->hidden1.cols() != kHidden1 ||
                          mask->hidden2.rows() != batch || mask->hidden2.cols() != kHidden2)) {
    throw ShapeError("mlp: dropout mask shape does not match the batch");
  }
  const double keep_scale = mask != nullptr ? 1.0 / (1.0 - m.dropout_rate) : 1.0;

  const Eigen::MatrixXd z1 = (x * m.w1.transpose()).rowwise() + m.b1.transpose();
  Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
  if (mask != nullptr) a1 = a1.cwiseProduct(mask->hidden1) * keep_scale;
  const Eigen::MatrixXd z2 = (a1 * m.w2.transpose()).rowwise() + m.b2.transpose();
  Eigen::MatrixXd a2 = z2.cwiseMax(0.0);
  if (mask != nullptr) a2 = a2.cwiseProduct(mask->hidden2) * keep_scale;
  const Eigen::MatrixXd z3 = (a2 * m.w3.transpose()).rowwise() + m.b3.transpose();
  const Eigen::VectorXd p = sigmoid(z3).col(0);

  const Eigen::VectorXd residual = p - y;
  LossAndGradients out;
  out.loss = residual.squaredNorm() / static_cast<double>(batch);

  const Eigen::VectorXd dz3 =
      (2.0 / static_cast<double>(batch)) * residual.cwiseProduct(p.cwiseProduct((1.0 - p.array()).matrix()));
  out.grad.w3 = dz3.transpose() * a2;
  out.grad.b3 = Eigen::VectorXd::Constant(1, dz3.sum());

  Eigen::MatrixXd da2 = dz3 * m.w3;
  if (mask != nullptr) da2 = da2.cwiseProduct(mask->hidden2) * keep_scale;
  const Eigen::MatrixXd dz2 = da2.cwiseProduct((z2.array() > 0.0).cast<double>().matrix());
  out.grad.w2 = dz2.transpose() * a1;
  out.grad.b2 = dz2.colwise().sum().transpose();

  Eigen::MatrixXd da1 = dz2 * m.w2;
  if (mask != nullptr) da1 = da1.cwiseProduct(mask->hidden1) * keep_scale;
  const Eigen::MatrixXd dz1 = da1.cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
  out.grad.w1 = dz1.transpose() * x;
  out.grad.b1 = dz1.colwise().sum().transpose();
  return out;
}

// Parameters and gradients viewed as one flat sequence for the optimizer.
template <typename Fn>
void for_each_param(MlpModel& m, const MlpGradients& g, Fn&& fn) {
  fn(m.w1.data(), g.w1.data(), m.w1.size(), 0);
  fn(m.b1.data(), g.b1.data(), m.b1.size(), 1);
  fn(m.w2.data(), g.w2.data(), m.w2.size(), 2);
  fn(m.b2.data(), g.b2.data(), m.b2.size(), 3);
  fn(m.w3.data(), g.w3.data(), m.w3.size(), 4);
  fn(m.b3.data(), g.b3.data(), m.b3.size(), 5);
}

}  // namespace

bool MlpModel::operator==(const MlpModel& o) const {
  auto same = [](const auto& a, const auto& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  return same(w1, o.w1) && same(w2, o.w2) && same(w3, o.w3) && same(b1, o.b1) && same(b2, o.b2) &&
         same(b3, o.b3) && dropout_rate == o.dropout_rate;
}

MlpModel mlp_init(Eigen::Index inputs, std::uint64_t seed) {
  if (inputs < 1) throw ShapeError("mlp_init: need at least one input");
  Rng rng(seed);
  MlpModel m;
  m.w1 = he_uniform(kHidden1, inputs, rng);
  m.w2 = he_uniform(kHidden2, kHidden1, rng);
  m.w3 = he_uniform(1, kHidden2, rng);
  m.b1 = Eigen::VectorXd::Zero(kHidden1);
  m.b2 = Eigen::VectorXd::Zero(kHidden2);
  m.b3 = Eigen::VectorXd::Zero(1);
  return m;
}

MlpModel mlp_zero(Eigen::Index inputs) {
  if (inputs < 1) throw ShapeError("mlp_zero: need at least one input");
  MlpModel m;
  m.w1 = Eigen::MatrixXd::Zero(kHidden1, inputs);
  m.w2 = Eigen::MatrixXd::Zero(kHidden2, kHidden1);
  m.w3 = Eigen::MatrixXd::Zero(1, kHidden2);
  m.b1 = Eigen::VectorXd::Zero(kHidden1);
  m.b2 = Eigen::VectorXd::Zero(kHidden2);
  m.b3 = Eigen::VectorXd::Zero(1);
  return m;
}

LossAndGradients mlp_loss_grad(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return backprop(m, x, y, nullptr);
}

LossAndGradients mlp_loss_grad(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const DropoutMask& mask) {
  return backprop(m, x, y, &mask);
}

Eigen::VectorXd mlp_forward(const MlpModel& m, const Eigen::MatrixXd& x) {
  if (x.cols() != m.inputs()) {
    throw ShapeError("mlp: input has " + std::to_string(x.cols()) + " features, model expects " +
                     std::to_string(m.inputs()));
  }
  const Eigen::MatrixXd a1 = ((x * m.w1.transpose()).rowwise() + m.b1.transpose()).cwiseMax(0.0);
  const Eigen::MatrixXd a2 = ((a1 * m.w2.transpose()).rowwise() + m.b2.transpose()).cwiseMax(0.0);
  return sigmoid((a2 * m.w3.transpose()).rowwise() + m.b3.transpose()).col(0);
}

double mlp_predict(const MlpModel& m, const Eigen::VectorXd& x) {
  return mlp_forward(m, x.transpose())(0);
}

MlpOptimizer parse_optimizer(const std::string& name) {
  if (name == "adam") return MlpOptimizer::kAdam;
  if (name == "sgd") return MlpOptimizer::kSgd;
  throw ConfigError("unknown optimizer '" + name + "' (expected adam or sgd)");
}

std::string optimizer_name(MlpOptimizer o) { return o == MlpOptimizer::kAdam ? "adam" : "sgd"; }

MlpModel mlp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MlpConfig& config) {
  if (x.rows() == 0) throw EmptyDataError("mlp_fit: no training rows");
  if (y.size() != x.rows()) throw ShapeError("mlp_fit: one target per row required");
  if (!x.allFinite() || !y.allFinite()) throw DataError("mlp_fit: non-finite inputs");
  if ((y.array() < 0.0).any() || (y.array() > 1.0).any()) throw DataError("mlp_fit: targets must lie in [0, 1]");
  if (config.batch == 0) throw ConfigError("mlp_fit: batch size must be positive");
  if (!(config.dropout_rate >= 0.0 && config.dropout_rate < 1.0)) {
    throw ConfigError("mlp_fit: dropout rate must lie in [0, 1)");
  }

  MlpModel m = mlp_init(x.cols(), config.seed);
  m.dropout_rate = config.dropout_rate;
  if (config.epochs == 0) return m;

  Rng rng(derive_seed(config.seed, "mlp-train"));
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-7;
  std::vector<std::vector<double>> first(6), second(6);
  MlpGradients zero_like;
  for_each_param(m, zero_like, [&](double*, const double*, Eigen::Index size, int slot) {
    first[slot].assign(static_cast<std::size_t>(size), 0.0);
    second[slot].assign(static_cast<std::size_t>(size), 0.0);
  });
  std::size_t step = 0;
  const double keep = 1.0 - config.dropout_rate;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < n; start += config.batch) {
      const std::size_t end = std::min(n, start + config.batch);
      const auto b = static_cast<Eigen::Index>(end - start);
      Eigen::MatrixXd xb(b, x.cols());
      Eigen::VectorXd yb(b);
      for (Eigen::Index r = 0; r < b; ++r) {
        xb.row(r) = x.row(order[start + static_cast<std::size_t>(r)]);
        yb(r) = y(order[start + static_cast<std::size_t>(r)]);
      }
      DropoutMask mask{Eigen::MatrixXd(b, kHidden1), Eigen::MatrixXd(b, kHidden2)};
      for (Eigen::Index r = 0; r < b; ++r) {
        for (Eigen::Index c = 0; c < kHidden1; ++c) mask.hidden1(r, c) = rng.uniform() < keep ? 1.0 : 0.0;
        for (Eigen::Index c = 0; c < kHidden2; ++c) mask.hidden2(r, c) = rng.uniform() < keep ? 1.0 : 0.0;
      }
      const auto lg = mlp_loss_grad(m, xb, yb, mask);
      if (!std::isfinite(lg.loss)) {
        throw DivergenceError("mlp_fit: non-finite loss in epoch " + std::to_string(epoch));
      }
      ++step;
      const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for_each_param(m, lg.grad, [&](double* p, const double* g, Eigen::Index size, int slot) {
        for (Eigen::Index k = 0; k < size; ++k) {
          if (config.optimizer == MlpOptimizer::kSgd) {
            p[k] -= config.learning_rate * g[k];
            continue;
          }
          auto& mo = first[slot][static_cast<std::size_t>(k)];
          auto& ve = second[slot][static_cast<std::size_t>(k)];
          mo = kBeta1 * mo + (1.0 - kBeta1) * g[k];
          ve = kBeta2 * ve + (1.0 - kBeta2) * g[k] * g[k];
          p[k] -= config.learning_rate * (mo / bc1) / (std::sqrt(ve / bc2) + kEps);
        }
      });
    }
  }
  return m;
}

}  // namespace metaseg::metalearn
