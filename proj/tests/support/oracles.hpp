#pragma once

// Reference implementations used only by the tests. They favour the most
// direct formulation over speed and share no code with the library beyond the
// Volume container.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "metaseg/rng.hpp"
#include "metaseg/volume_io.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

struct VolumeFacts {
  double mean = 0, std = 0, skew = 0, kurtosis = 0, entropy = 0, median = 0, sparsity = 0;
  std::vector<double> adj_mi, adj_corr;
  std::vector<double> middle;  // 32 x 32 nearest-neighbour resize of slice Z/2
};

VolumeFacts volume_facts(const metaseg::Volume& v, std::size_t hist_bins = 256, std::size_t mi_bins = 64);

/// The 33 statistical features of a subset, in slot order.
std::array<double, 33> stat_features(const std::vector<metaseg::Volume>& subset, std::size_t n_dataset_volumes,
                                     std::size_t hist_bins = 256, std::size_t mi_bins = 64);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
std::vector<double> jacobi_eigenvalues(Matrix a);

metaseg::Volume random_volume(metaseg::Rng& rng, metaseg::Dims dims);

// ---- epsilon-SVR dual --------------------------------------------------------
//
// With beta = alpha - alpha*, the dual is
//   minimise 1/2 beta' K beta + eps |beta|_1 - y' beta
//   subject to sum beta = 0, |beta_i| <= C.

struct DualSolution {
  std::vector<double> beta;
  double bias = 0.0;
  std::vector<double> train_pred;  // (K beta)_i + bias
  double objective = 0.0;
};

Matrix rbf_gram(const std::vector<std::vector<double>>& x, double gamma);
double dual_objective(const Matrix& k, const std::vector<double>& y, double eps, const std::vector<double>& beta);

/// Bias from the KKT conditions of a dual point: the mean over free variables,
/// else the midpoint of the interval allowed by the bounded ones.
double kkt_bias(const Matrix& k, const std::vector<double>& y, double c, double eps, const std::vector<double>& beta);

/// Exact optimum by enumerating every assignment of each beta_i to
/// {-C, free negative, 0, free positive, C} and solving the resulting linear
/// KKT system; the feasible candidate with the lowest objective wins.
DualSolution svr_active_set(const Matrix& k, const std::vector<double>& y, double c, double eps);

/// Exhaustive search on a uniform grid of step `step` over beta_1..beta_{n-1}
/// in [-C, C], with beta_n fixed by the equality constraint.
DualSolution svr_grid(const Matrix& k, const std::vector<double>& y, double c, double eps, double step);

/// Grid search that repeatedly shrinks a window around the incumbent, ending
/// at a step no larger than `final_step`. Valid because the dual is convex.
DualSolution svr_grid_refined(const Matrix& k, const std::vector<double>& y, double c, double eps,
                              double final_step);

}  // namespace oracle
