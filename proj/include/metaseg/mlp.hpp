#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <string>

namespace metaseg::metalearn {

inline constexpr Eigen::Index kHidden1 = 50;
inline constexpr Eigen::Index kHidden2 = 30;
inline constexpr double kDefaultDropout = 0.5;

/// q -> 50 -> 30 -> 1 perceptron: ReLU hidden layers, logistic output.
/// Weight matrices are (out x in).
struct MlpModel {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;
  double dropout_rate = kDefaultDropout;

  Eigen::Index inputs() const { return w1.cols(); }
  bool operator==(const MlpModel& other) const;
};

/// He-uniform weights U(-sqrt(6 / fan_in), sqrt(6 / fan_in)) drawn in the
/// order w1, w2, w3 (row-major) from Rng(seed); biases zero.
MlpModel mlp_init(Eigen::Index inputs, std::uint64_t seed);
/// All weights and biases zero; outputs sigmoid(0) = 0.5.
MlpModel mlp_zero(Eigen::Index inputs);

/// Keep flags (0 or 1) per sample and hidden unit. Kept activations are
/// scaled by 1 / (1 - dropout_rate).
struct DropoutMask {
  Eigen::MatrixXd hidden1;  // batch x 50
  Eigen::MatrixXd hidden2;  // batch x 30
};

struct MlpGradients {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;
};

struct LossAndGradients {
  double loss = 0.0;  // mean over the batch of (prediction - target)^2
  MlpGradients grad;
};

/// Exact backpropagation without dropout.
LossAndGradients mlp_loss_grad(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
/// Exact backpropagation through the given dropout mask.
LossAndGradients mlp_loss_grad(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const DropoutMask& mask);

/// Inference (dropout disabled); one output per row, each in (0, 1).
Eigen::VectorXd mlp_forward(const MlpModel& m, const Eigen::MatrixXd& x);
double mlp_predict(const MlpModel& m, const Eigen::VectorXd& x);

enum class MlpOptimizer { kAdam, kSgd };

MlpOptimizer parse_optimizer(const std::string& name);
std::string optimizer_name(MlpOptimizer o);

struct MlpConfig {
  std::size_t epochs = 200;
  std::size_t batch = 32;
  double learning_rate = 1e-3;
  MlpOptimizer optimizer = MlpOptimizer::kAdam;
  double dropout_rate = kDefaultDropout;
  std::uint64_t seed = 0;
  bool operator==(const MlpConfig&) const = default;
};

/// Mini-batch training of mlp_init(q, seed). Each epoch shuffles the rows and
/// draws fresh Bernoulli keep masks from a generator seeded by `seed`.
/// Adam uses beta1 = 0.9, beta2 = 0.999, eps = 1e-7. Returns the model after
/// the final epoch; a non-finite batch loss raises DivergenceError.
MlpModel mlp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MlpConfig& config);

}  // namespace metaseg::metalearn
