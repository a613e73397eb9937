#include "metaseg/statfeat.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "metaseg/errors.hpp"

namespace metaseg::statfeat {

namespace {

std::vector<std::size_t> bin_indices(std::span<const float> values, std::size_t bins) {
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<std::size_t> idx(values.size(), 0);
  if (hi > lo) {
    const double width = hi - lo;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto b = static_cast<std::size_t>(std::floor((values[i] - lo) / width * bins));
      idx[i] = std::min(b, bins - 1);
    }
  }
  return idx;
}

struct Summary {
  double mean = 0.0;
  double std = 0.0;
  double cvar = 0.0;
};

Summary summarize(const std::vector<double>& values) {
  Summary s;
  const auto n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  s.cvar = std::abs(s.mean) < 1e-12 ? 0.0 : s.std / std::abs(s.mean);
  return s;
}

double mean_or_zero(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace

const std::array<std::string_view, kFeatureCount>& slot_names() {
  static const std::array<std::string_view, kFeatureCount> names = {
      "Number of instances",
      "Voxel value M", "Voxel value STD", "Voxel value CVAR",
      "Skew M", "Skew STD", "Skew CVAR",
      "Kurtosis M", "Kurtosis STD", "Kurtosis CVAR",
      "Entropy M", "Entropy STD", "Entropy CVAR",
      "Median M", "Median STD",
      "Mutual information M", "Mutual information STD", "Mutual information CVAR",
      "Mutual information maximum value",
      "Correlation M", "Correlation STD", "Correlation CVAR",
      "Sparsity M", "Sparsity STD", "Sparsity CVAR",
      "Slice size M", "Slice size STD", "Slice size CVAR",
      "Number of slices M", "Number of slices STD", "Number of slices CVAR",
      "Equivalent number of features",
      "Noise signal ratio",
  };
  return names;
}

std::vector<double> histogram(std::span<const float> values, std::size_t bins) {
  if (bins < 2) throw ConfigError("histogram needs at least 2 bins");
  if (values.empty()) throw EmptyDataError("histogram of empty data");
  std::vector<double> counts(bins, 0.0);
  for (std::size_t b : bin_indices(values, bins)) counts[b] += 1.0;
  return counts;
}

double entropy(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) {
    if (c < 0.0 || !std::isfinite(c)) throw DataError("histogram counts must be finite and non-negative");
    total += c;
  }
  if (total <= 0.0) throw EmptyDataError("entropy of an all-zero histogram");
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      const double p = c / total;
      h -= p * std::log2(p);
    }
  }
  return std::max(h, 0.0);
}

double mutual_information(std::span<const float> a, std::span<const float> b, std::size_t bins) {
  if (a.size() != b.size()) {
    throw ShapeError("mutual_information: slices have " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()) + " pixels");
  }
  if (bins < 2) throw ConfigError("mutual_information needs at least 2 bins");
  if (a.empty()) throw EmptyDataError("mutual_information of empty slices");
  const auto ia = bin_indices(a, bins);
  const auto ib = bin_indices(b, bins);
  std::vector<double> ha(bins, 0.0), hb(bins, 0.0), joint(bins * bins, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ha[ia[i]] += 1.0;
    hb[ib[i]] += 1.0;
    joint[ia[i] * bins + ib[i]] += 1.0;
  }
  const double mi = entropy(ha) + entropy(hb) - entropy(joint);
  return std::max(mi, 0.0);
}

double pearson(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw ShapeError("pearson: slices have " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()) + " pixels");
  }
  if (a.empty()) throw EmptyDataError("pearson of empty slices");
  const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
  const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
  if (*amin == *amax || *bmin == *bmax) return 0.0;
  const auto n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> resize_nearest(std::span<const float> slice, std::size_t width,
                                   std::size_t height, std::size_t grid) {
  if (slice.size() != width * height) throw ShapeError("resize_nearest: slice size mismatch");
  std::vector<double> out(grid * grid);
  for (std::size_t r = 0; r < grid; ++r) {
    const std::size_t sy = std::min(height - 1, (2 * r + 1) * height / (2 * grid));
    for (std::size_t c = 0; c < grid; ++c) {
      const std::size_t sx = std::min(width - 1, (2 * c + 1) * width / (2 * grid));
      out[r * grid + c] = slice[sy * width + sx];
    }
  }
  return out;
}

std::size_t enf(const std::vector<std::vector<double>>& slices) {
  if (slices.empty()) throw EmptyDataError("enf needs at least one slice");
  const auto n = static_cast<Eigen::Index>(slices.size());
  const auto dim = static_cast<Eigen::Index>(slices.front().size());
  Eigen::MatrixXd data(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(slices[i].size()) != dim) throw ShapeError("enf: slice length mismatch");
    data.row(i) = Eigen::Map<const Eigen::RowVectorXd>(slices[i].data(), dim);
  }
  if (n < 2) return 1;
  data.rowwise() -= data.colwise().mean();
  // The n x n Gram matrix shares its non-zero spectrum with the dim x dim
  // covariance and is much smaller for typical subset sizes.
  const Eigen::MatrixXd gram = (data * data.transpose()) / static_cast<double>(n - 1);
  const double total = gram.trace();
  if (total < 1e-12) return 1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
  Eigen::VectorXd eig = solver.eigenvalues().cwiseMax(0.0);
  std::vector<double> sorted(eig.data(), eig.data() + eig.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double eig_total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  double cumulative = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    if (cumulative >= kEnfExplained * eig_total * (1.0 - 1e-12)) return k + 1;
  }
  return sorted.size();
}

double nsr(double entropy_m, double mi_m) {
  if (mi_m < 1e-9) return kNsrCap;
  return std::max(0.0, (entropy_m - mi_m) / mi_m);
}

PerVolumeStats volume_stats(const Volume& v, std::size_t hist_bins, std::size_t mi_bins) {
  if (hist_bins < 2 || mi_bins < 2) throw ConfigError("histogram bin counts must be at least 2");
  const auto voxels = v.voxels();
  const Dims& d = v.dims();
  PerVolumeStats s;
  const auto n = static_cast<double>(voxels.size());

  const auto [lo_it, hi_it] = std::minmax_element(voxels.begin(), voxels.end());
  const float lo = *lo_it;
  const bool constant = *lo_it == *hi_it;

  double sum = 0.0;
  for (float x : voxels) sum += x;
  s.mean = sum / n;
  if (constant) {
    s.mean = lo;
  } else {
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (float x : voxels) {
      const double dv = x - s.mean;
      const double d2 = dv * dv;
      m2 += d2;
      m3 += d2 * dv;
      m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    s.std = std::sqrt(m2);
    if (m2 > 0.0) {
      s.skew = m3 / (m2 * s.std);
      s.kurtosis = m4 / (m2 * m2) - 3.0;
    }
  }

  s.entropy = entropy(histogram(voxels, hist_bins));

  std::vector<float> sorted(voxels.begin(), voxels.end());
  const std::size_t mid = sorted.size() / 2;
  std::nth_element(sorted.begin(), sorted.begin() + mid, sorted.end());
  const double upper = sorted[mid];
  if (sorted.size() % 2 == 0) {
    const double lower = *std::max_element(sorted.begin(), sorted.begin() + mid);
    s.median = 0.5 * (lower + upper);
  } else {
    s.median = upper;
  }

  s.sparsity = static_cast<double>(std::count(voxels.begin(), voxels.end(), lo)) / n;
  s.slice_size = static_cast<double>(d.slice_size());
  s.n_slices = static_cast<double>(d.z);

  if (d.z > 1) {
    s.adj_mi.reserve(d.z - 1);
    s.adj_corr.reserve(d.z - 1);
    for (std::size_t k = 0; k + 1 < d.z; ++k) {
      s.adj_mi.push_back(mutual_information(v.slice(k), v.slice(k + 1), mi_bins));
      s.adj_corr.push_back(pearson(v.slice(k), v.slice(k + 1)));
    }
  }
  s.middle_slice = resize_nearest(v.slice(d.z / 2), d.x, d.y);
  return s;
}

StatFeatureVector aggregate(std::span<const PerVolumeStats> stats, std::size_t n_dataset_volumes) {
  if (stats.empty()) throw EmptyDataError("aggregate needs a non-empty subset");
  if (n_dataset_volumes == 0) throw EmptyDataError("aggregate: dataset has no volumes");

  const std::size_t n = stats.size();
  std::vector<double> means(n), skews(n), kurts(n), entropies(n), medians(n), mis(n), corrs(n),
      sparsities(n), slice_sizes(n), slices(n);
  std::vector<std::vector<double>> middles;
  middles.reserve(n);
  double mi_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = stats[i];
    means[i] = s.mean;
    skews[i] = s.skew;
    kurts[i] = s.kurtosis;
    entropies[i] = s.entropy;
    medians[i] = s.median;
    mis[i] = mean_or_zero(s.adj_mi);
    corrs[i] = mean_or_zero(s.adj_corr);
    sparsities[i] = s.sparsity;
    slice_sizes[i] = s.slice_size;
    slices[i] = s.n_slices;
    for (double m : s.adj_mi) mi_max = std::max(mi_max, m);
    middles.push_back(s.middle_slice);
  }

  StatFeatureVector out;
  auto& x = out.values;
  auto put3 = [&](std::size_t slot, const std::vector<double>& values) {
    const Summary sm = summarize(values);
    x[slot] = sm.mean;
    x[slot + 1] = sm.std;
    x[slot + 2] = sm.cvar;
  };
  x[kNumberOfInstances] = std::log10(static_cast<double>(n_dataset_volumes));
  put3(kVoxelMean, means);
  put3(kSkewMean, skews);
  put3(kKurtosisMean, kurts);
  put3(kEntropyMean, entropies);
  const Summary med = summarize(medians);
  x[kMedianMean] = med.mean;
  x[kMedianStd] = med.std;
  put3(kMiMean, mis);
  x[kMiMax] = mi_max;
  put3(kCorrMean, corrs);
  put3(kSparsityMean, sparsities);
  put3(kSliceSizeMean, slice_sizes);
  put3(kSlicesMean, slices);
  x[kEnf] = static_cast<double>(enf(middles));
  x[kNsr] = nsr(x[kEntropyMean], x[kMiMean]);
  return out;
}

std::vector<double> append_task_features(std::span<const double> x, const TaskSpecificFeatures& t) {
  t.validate();
  std::vector<double> out(x.begin(), x.end());
  const auto v = t.values();
  out.insert(out.end(), v.begin(), v.end());
  return out;
}

}  // namespace metaseg::statfeat
