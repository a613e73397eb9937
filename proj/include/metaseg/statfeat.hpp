#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "metaseg/task_features.hpp"
#include "metaseg/volume_io.hpp"

namespace metaseg::statfeat {

inline constexpr std::size_t kFeatureCount = 33;
inline constexpr std::size_t kDefaultHistBins = 256;
inline constexpr std::size_t kDefaultMiBins = 64;
/// Middle slices are resized to kEnfGrid x kEnfGrid before the ENF decomposition.
inline constexpr std::size_t kEnfGrid = 32;
inline constexpr double kEnfExplained = 0.95;
inline constexpr double kNsrCap = 1e6;

/// Slot positions of the statistical meta-feature vector.
enum Slot : std::size_t {
  kNumberOfInstances = 0,
  kVoxelMean, kVoxelStd, kVoxelCvar,
  kSkewMean, kSkewStd, kSkewCvar,
  kKurtosisMean, kKurtosisStd, kKurtosisCvar,
  kEntropyMean, kEntropyStd, kEntropyCvar,
  kMedianMean, kMedianStd,
  kMiMean, kMiStd, kMiCvar, kMiMax,
  kCorrMean, kCorrStd, kCorrCvar,
  kSparsityMean, kSparsityStd, kSparsityCvar,
  kSliceSizeMean, kSliceSizeStd, kSliceSizeCvar,
  kSlicesMean, kSlicesStd, kSlicesCvar,
  kEnf,
  kNsr,
};

/// Human-readable slot names, in slot order.
const std::array<std::string_view, kFeatureCount>& slot_names();

/// Slots holding a coefficient of variation.
inline constexpr std::array<std::size_t, 9> kCvarSlots = {
    kVoxelCvar, kSkewCvar, kKurtosisCvar, kEntropyCvar, kMiCvar,
    kCorrCvar, kSparsityCvar, kSliceSizeCvar, kSlicesCvar};

struct PerVolumeStats {
  double mean = 0.0;
  double std = 0.0;       // population standard deviation over voxels
  double skew = 0.0;      // biased Fisher skewness
  double kurtosis = 0.0;  // biased excess kurtosis
  double entropy = 0.0;   // bits
  double median = 0.0;
  double sparsity = 0.0;  // fraction of voxels equal to the volume minimum
  double slice_size = 0.0;
  double n_slices = 0.0;
  std::vector<double> adj_mi;
  std::vector<double> adj_corr;
  /// Middle slice (index Z/2) resized to kEnfGrid^2, row-major.
  std::vector<double> middle_slice;
};

struct StatFeatureVector {
  std::array<double, kFeatureCount> values{};
};

/// Counts of `values` over `bins` equal-width bins spanning [min, max] of the
/// values. Bin index is floor((v - min) / (max - min) * bins), clamped to
/// bins - 1; a constant input puts everything in bin 0.
std::vector<double> histogram(std::span<const float> values, std::size_t bins);

/// Shannon entropy in bits of a histogram of non-negative counts.
double entropy(std::span<const double> counts);

/// Mutual information in bits between two equally sized slices, each binned
/// over its own range. Clamped at 0.
double mutual_information(std::span<const float> a, std::span<const float> b,
                          std::size_t bins = kDefaultMiBins);

/// Pearson correlation; 0 when either side has zero variance.
double pearson(std::span<const float> a, std::span<const float> b);

/// Nearest-neighbour resize of a width x height slice to grid x grid. Source
/// pixel for output column c is floor((c + 0.5) * width / grid).
std::vector<double> resize_nearest(std::span<const float> slice, std::size_t width,
                                   std::size_t height, std::size_t grid = kEnfGrid);

/// Equivalent number of features: the number of principal components needed
/// to explain kEnfExplained of the total variance of the given slices.
std::size_t enf(const std::vector<std::vector<double>>& slices);

/// Noise-to-signal ratio (H - MI) / MI, floored at 0, kNsrCap when MI < 1e-9.
double nsr(double entropy_m, double mi_m);

PerVolumeStats volume_stats(const Volume& v, std::size_t hist_bins = kDefaultHistBins,
                            std::size_t mi_bins = kDefaultMiBins);

StatFeatureVector aggregate(std::span<const PerVolumeStats> stats, std::size_t n_dataset_volumes);

/// Returns `x` followed by the five task features in declaration order.
std::vector<double> append_task_features(std::span<const double> x, const TaskSpecificFeatures& t);

}  // namespace metaseg::statfeat
