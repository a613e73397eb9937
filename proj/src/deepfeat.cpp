#include "metaseg/deepfeat.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "metaseg/binary_io.hpp"
#include "metaseg/errors.hpp"

namespace metaseg::deepfeat {

namespace {

std::string real_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double pearson49(const std::vector<double>& a, const std::vector<double>& b, bool& constant) {
  const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
  const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
  constant = *amin == *amax || *bmin == *bmax;
  if (constant) return 1.0;
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) {
    constant = true;
    return 1.0;
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

bool is_supported_channel_count(std::size_t z) { return z == 512 || z == 2048 || z == 1024; }

void FeatureTensor::validate() const {
  if (!is_supported_channel_count(channels)) {
    throw ShapeError("feature tensor has " + std::to_string(channels) +
                     " channels; expected 512, 2048 or 1024");
  }
  if (maps.size() != channels * kMapSize) {
    throw ShapeError("feature tensor payload has " + std::to_string(maps.size()) + " values, expected " +
                     std::to_string(channels * kMapSize));
  }
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (!std::isfinite(maps[i])) throw DataError("non-finite tensor value at index " + std::to_string(i));
  }
}

FeatureTensor ingest_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open tensor " + path.string());
  const std::string name = path.string();
  binary_io::expect_line(in, 1, "MLTEN 1", name);
  const std::string shape = binary_io::expect_field(in, 2, "shape", name);
  std::istringstream shape_in(shape);
  std::vector<std::string> tokens;
  for (std::string tok; shape_in >> tok;) tokens.push_back(tok);
  if (tokens.size() != 3 || tokens[1] != "7" || tokens[2] != "7" ||
      shape != tokens[0] + " 7 7") {
    throw FormatError(name + ": line 2: malformed shape '" + shape + "', expected 'Z 7 7'");
  }
  FeatureTensor t;
  t.channels = binary_io::parse_size(tokens[0], 2, name);
  if (!is_supported_channel_count(t.channels)) {
    throw ShapeError(name + ": unsupported channel count " + tokens[0] + " (expected 512, 2048 or 1024)");
  }
  t.dataset_id = binary_io::expect_field(in, 3, "dataset", name);
  t.subset_id = binary_io::parse_size(binary_io::expect_field(in, 4, "subset", name), 4, name);
  binary_io::expect_line(in, 5, "", name);
  t.maps = binary_io::get_f32_array(in, t.channels * kMapSize, name);
  if (!binary_io::at_end(in)) throw FormatError(name + ": trailing bytes after tensor payload");
  try {
    t.validate();
  } catch (const Error& e) {
    throw FormatError(name + ": " + e.what());
  }
  return t;
}

void write_tensor(const FeatureTensor& t, const std::filesystem::path& path) {
  t.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write tensor " + path.string());
  out << "MLTEN 1\n"
      << "shape: " << t.channels << " 7 7\n"
      << "dataset: " << t.dataset_id << '\n'
      << "subset: " << t.subset_id << '\n'
      << '\n';
  binary_io::put_f32_array(out, t.maps);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<FeatureTensor> ingest_tensor_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".mlten") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<FeatureTensor> tensors;
  tensors.reserve(files.size());
  for (const auto& f : files) tensors.push_back(ingest_tensor(f));
  return tensors;
}

double map_mean(std::span<const float> map) {
  double s = 0.0;
  for (float v : map) s += v;
  return s / static_cast<double>(map.size());
}

BinarizationModel fit_binarizer(const TensorsByDataset& training, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha must lie in (0, 1], got " + real_text(alpha));
  }
  if (training.size() < 2) {
    throw InsufficientDataError("binarizer needs at least 2 training datasets, got " +
                                std::to_string(training.size()));
  }
  std::size_t z = 0;
  for (const auto& [id, tensors] : training) {
    if (tensors.empty()) throw InsufficientDataError("dataset '" + id + "' has no tensors");
    for (const auto& t : tensors) {
      if (z == 0) z = t.channels;
      if (t.channels != z) {
        throw ShapeError("mixed channel counts in training tensors (" + std::to_string(z) + " and " +
                         std::to_string(t.channels) + ")");
      }
    }
  }

  // Per-dataset mean maps. Tensors are summed in a canonical order so the
  // result does not depend on how the caller ordered them.
  std::vector<std::vector<double>> mean_maps;  // [dataset][c * 49 + k]
  mean_maps.reserve(training.size());
  for (const auto& [id, tensors] : training) {
    std::vector<const FeatureTensor*> order;
    for (const auto& t : tensors) order.push_back(&t);
    std::sort(order.begin(), order.end(), [](const FeatureTensor* a, const FeatureTensor* b) {
      if (a->subset_id != b->subset_id) return a->subset_id < b->subset_id;
      return a->maps < b->maps;
    });
    std::vector<double> acc(z * kMapSize, 0.0);
    for (const auto* t : order) {
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += t->maps[i];
    }
    for (auto& v : acc) v /= static_cast<double>(order.size());
    mean_maps.push_back(std::move(acc));
  }

  BinarizationModel m;
  m.alpha = alpha;
  m.informative.assign(z, 0);
  m.channel_median.assign(z, 0.0);
  m.correlation.assign(z, 0.0);
  const std::size_t nd = mean_maps.size();
  std::vector<double> a(kMapSize), b(kMapSize);
  for (std::size_t c = 0; c < z; ++c) {
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < nd; ++i) {
      for (std::size_t j = i + 1; j < nd; ++j) {
        std::copy_n(mean_maps[i].begin() + c * kMapSize, kMapSize, a.begin());
        std::copy_n(mean_maps[j].begin() + c * kMapSize, kMapSize, b.begin());
        bool constant = false;
        const double r = pearson49(a, b, constant);
        total += constant ? 1.0 : std::abs(r);
        ++pairs;
      }
    }
    m.correlation[c] = total / static_cast<double>(pairs);
    m.informative[c] = m.correlation[c] < alpha ? 1 : 0;

    std::vector<double> channel_means;
    for (const auto& [id, tensors] : training) {
      for (const auto& t : tensors) channel_means.push_back(map_mean(t.map(c)));
    }
    m.channel_median[c] = median_of(std::move(channel_means));
  }
  return m;
}

std::vector<double> binarize(const FeatureTensor& t, const BinarizationModel& m) {
  if (t.channels != m.channels()) {
    throw ShapeError("tensor has " + std::to_string(t.channels) + " channels, binarizer expects " +
                     std::to_string(m.channels()));
  }
  std::vector<double> bits(t.channels, 0.0);
  for (std::size_t c = 0; c < t.channels; ++c) {
    if (m.informative[c] && map_mean(t.map(c)) > m.channel_median[c]) bits[c] = 1.0;
  }
  return bits;
}

SelectionModel fit_selector(const std::vector<std::vector<double>>& vectors,
                            const std::vector<std::string>& labels, const SelectorOptions& options) {
  if (vectors.size() != labels.size()) throw ShapeError("fit_selector: one label per vector required");
  const std::set<std::string> classes(labels.begin(), labels.end());
  if (classes.size() < 2) {
    throw InsufficientDataError("fit_selector needs at least 2 distinct labels, got " +
                                std::to_string(classes.size()));
  }
  const std::size_t dim = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != dim) throw ShapeError("fit_selector: vectors differ in length");
  }
  const std::size_t n = vectors.size();

  std::vector<double> centre(dim, 0.0);
  for (const auto& v : vectors)
    for (std::size_t c = 0; c < dim; ++c) centre[c] += v[c];
  for (auto& c : centre) c /= static_cast<double>(n);
  std::vector<std::vector<double>> xs(n, std::vector<double>(dim));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < dim; ++c) xs[i][c] = vectors[i][c] - centre[c];

  SelectionModel m;
  m.importance.assign(dim, 0.0);
  std::vector<double> w(dim), grad(dim);
  for (const auto& cls : classes) {
    std::fill(w.begin(), w.end(), 0.0);
    double bias = 0.0;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
      for (std::size_t c = 0; c < dim; ++c) grad[c] = options.lambda * w[c];
      double grad_b = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double y = labels[i] == cls ? 1.0 : -1.0;
        double score = bias;
        for (std::size_t c = 0; c < dim; ++c) score += w[c] * xs[i][c];
        if (y * score < 1.0) {
          const double scale = -y / static_cast<double>(n);
          for (std::size_t c = 0; c < dim; ++c) grad[c] += scale * xs[i][c];
          grad_b += scale;
        }
      }
      for (std::size_t c = 0; c < dim; ++c) w[c] -= options.learning_rate * grad[c];
      bias -= options.learning_rate * grad_b;
    }
    for (std::size_t c = 0; c < dim; ++c) m.importance[c] = std::max(m.importance[c], std::abs(w[c]));
  }

  m.tau = std::accumulate(m.importance.begin(), m.importance.end(), 0.0) / static_cast<double>(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    if (m.importance[c] > 0.0 && m.importance[c] >= m.tau) m.kept_indices.push_back(c);
  }
  if (m.kept_indices.empty()) {
    const auto best = std::max_element(m.importance.begin(), m.importance.end());
    m.kept_indices.push_back(static_cast<std::size_t>(best - m.importance.begin()));
  }
  return m;
}

std::vector<double> select(std::span<const double> v, const SelectionModel& m) {
  if (v.size() != m.importance.size()) {
    throw ShapeError("select: vector has length " + std::to_string(v.size()) + ", selector expects " +
                     std::to_string(m.importance.size()));
  }
  std::vector<double> out;
  out.reserve(m.kept_indices.size());
  for (std::size_t idx : m.kept_indices) out.push_back(v[idx]);
  return out;
}

void save_binarizer(const BinarizationModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "MLBIN 1\n"
      << "channels: " << m.channels() << '\n'
      << "alpha: " << real_text(m.alpha) << '\n'
      << '\n';
  for (auto flag : m.informative) out.put(static_cast<char>(flag ? 1 : 0));
  binary_io::put_f64_array(out, m.channel_median);
  binary_io::put_f64_array(out, m.correlation);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

BinarizationModel load_binarizer(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string name = path.string();
  binary_io::expect_line(in, 1, "MLBIN 1", name);
  const std::size_t z = binary_io::parse_size(binary_io::expect_field(in, 2, "channels", name), 2, name);
  BinarizationModel m;
  m.alpha = binary_io::parse_real(binary_io::expect_field(in, 3, "alpha", name), 3, name);
  binary_io::expect_line(in, 4, "", name);
  m.informative.resize(z);
  for (auto& flag : m.informative) {
    const int c = in.get();
    if (c != 0 && c != 1) throw FormatError(name + ": bad informative flag");
    flag = static_cast<std::uint8_t>(c);
  }
  m.channel_median = binary_io::get_f64_array(in, z, name);
  m.correlation = binary_io::get_f64_array(in, z, name);
  if (!binary_io::at_end(in)) throw FormatError(name + ": trailing bytes");
  return m;
}

void save_selector(const SelectionModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "MLSEL 1\n"
      << "channels: " << m.importance.size() << '\n'
      << "kept: " << m.kept_indices.size() << '\n'
      << '\n';
  for (std::size_t idx : m.kept_indices) binary_io::put_u64(out, idx);
  binary_io::put_f64_array(out, m.importance);
  binary_io::put_f64(out, m.tau);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

SelectionModel load_selector(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string name = path.string();
  binary_io::expect_line(in, 1, "MLSEL 1", name);
  const std::size_t z = binary_io::parse_size(binary_io::expect_field(in, 2, "channels", name), 2, name);
  const std::size_t k = binary_io::parse_size(binary_io::expect_field(in, 3, "kept", name), 3, name);
  binary_io::expect_line(in, 4, "", name);
  SelectionModel m;
  for (std::size_t i = 0; i < k; ++i) {
    const auto idx = binary_io::get_u64(in, name);
    if (idx >= z || (!m.kept_indices.empty() && idx <= m.kept_indices.back())) {
      throw FormatError(name + ": kept indices must be increasing and below " + std::to_string(z));
    }
    m.kept_indices.push_back(static_cast<std::size_t>(idx));
  }
  m.importance = binary_io::get_f64_array(in, z, name);
  m.tau = binary_io::get_f64(in, name);
  if (!binary_io::at_end(in)) throw FormatError(name + ": trailing bytes");
  return m;
}

}  // namespace metaseg::deepfeat
