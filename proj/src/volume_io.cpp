#include "metaseg/volume_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "metaseg/binary_io.hpp"
#include "metaseg/csv.hpp"
#include "metaseg/errors.hpp"
#include "metaseg/rng.hpp"

namespace metaseg {

Volume::Volume(Dims dims, std::vector<float> voxels) : dims_(dims), voxels_(std::move(voxels)) {
  if (dims_.x == 0 || dims_.y == 0 || dims_.z == 0) {
    throw ShapeError("volume dims must be positive");
  }
  if (voxels_.size() != dims_.count()) {
    throw ShapeError("volume has " + std::to_string(voxels_.size()) + " voxels, dims require " +
                     std::to_string(dims_.count()));
  }
  for (std::size_t i = 0; i < voxels_.size(); ++i) {
    if (!std::isfinite(voxels_[i])) {
      throw DataError("non-finite voxel at index " + std::to_string(i));
    }
  }
}

std::span<const float> Volume::slice(std::size_t k) const {
  if (k >= dims_.z) throw ShapeError("slice index out of range");
  return std::span<const float>(voxels_).subspan(k * dims_.slice_size(), dims_.slice_size());
}

bool Volume::operator==(const Volume& other) const {
  return dims_ == other.dims_ &&
         std::memcmp(voxels_.data(), other.voxels_.data(), voxels_.size() * sizeof(float)) == 0;
}

namespace {

std::size_t parse_dim(const std::string& token, const std::string& context) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || value == 0) {
    throw FormatError(context);
  }
  return value;
}

}  // namespace

Volume read_volume(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open volume " + path.string());

  const std::string name = path.string();
  std::string line;
  auto expect_line = [&](int number, const std::string& expected) {
    if (!binary_io::read_header_line(in, line) || line != expected) {
      throw FormatError(name + ": line " + std::to_string(number) + ": expected '" + expected +
                        "', got '" + line + "'");
    }
  };

  expect_line(1, "MLVOL 1");

  if (!binary_io::read_header_line(in, line) || line.rfind("dims: ", 0) != 0) {
    throw FormatError(name + ": line 2: expected 'dims: X Y Z', got '" + line + "'");
  }
  std::istringstream dims_in(line.substr(6));
  std::vector<std::string> tokens;
  for (std::string tok; dims_in >> tok;) tokens.push_back(tok);
  const std::string dims_error = name + ": line 2: malformed dims '" + line + "'";
  if (tokens.size() != 3 || line != "dims: " + tokens[0] + " " + tokens[1] + " " + tokens[2]) {
    throw FormatError(dims_error);
  }
  const Dims dims{parse_dim(tokens[0], dims_error), parse_dim(tokens[1], dims_error),
                  parse_dim(tokens[2], dims_error)};

  expect_line(3, "dtype: f32");
  expect_line(4, "order: zyx");
  expect_line(5, "");

  auto voxels = binary_io::get_f32_array(in, dims.count(), name);
  if (!binary_io::at_end(in)) {
    throw TruncationError(name + ": payload longer than dims " + tokens[0] + "x" + tokens[1] + "x" +
                          tokens[2] + " require");
  }
  for (std::size_t i = 0; i < voxels.size(); ++i) {
    if (!std::isfinite(voxels[i])) {
      throw DataError(name + ": non-finite voxel at index " + std::to_string(i));
    }
  }
  return Volume(dims, std::move(voxels));
}

void write_volume(const Volume& v, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write volume " + path.string());
  const Dims& d = v.dims();
  out << "MLVOL 1\n"
      << "dims: " << d.x << ' ' << d.y << ' ' << d.z << '\n'
      << "dtype: f32\n"
      << "order: zyx\n"
      << '\n';
  binary_io::put_f32_array(out, v.voxels());
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<DatasetStore> read_manifest(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  csv::expect_header(table, {"dataset_id", "volume_path"}, path);
  const auto base = path.parent_path();
  std::vector<DatasetStore> datasets;
  for (const auto& row : table.rows) {
    const std::string& id = row.fields[0];
    if (id.empty()) {
      throw FormatError(path.string() + ":" + std::to_string(row.line) + ": empty dataset_id");
    }
    if (row.fields[1].empty()) {
      throw FormatError(path.string() + ":" + std::to_string(row.line) + ": empty volume_path");
    }
    std::filesystem::path vol = row.fields[1];
    if (vol.is_relative()) vol = base / vol;
    auto it = std::find_if(datasets.begin(), datasets.end(),
                           [&](const DatasetStore& d) { return d.dataset_id == id; });
    if (it == datasets.end()) {
      datasets.push_back({id, {}, std::nullopt});
      it = std::prev(datasets.end());
    }
    it->volume_paths.push_back(std::move(vol));
  }
  if (datasets.empty()) throw EmptyDataError(path.string() + ": manifest lists no volumes");
  return datasets;
}

void write_manifest(const std::vector<DatasetStore>& datasets, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  const auto base = path.parent_path();
  out << "dataset_id,volume_path\n";
  for (const auto& ds : datasets) {
    for (const auto& p : ds.volume_paths) {
      auto rel = p.lexically_relative(base);
      out << ds.dataset_id << ',' << (rel.empty() ? p : rel).generic_string() << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void attach_descriptors(std::vector<DatasetStore>& datasets, const std::filesystem::path& dir) {
  for (auto& ds : datasets) {
    const auto p = descriptor_path(dir, ds.dataset_id);
    if (!std::filesystem::exists(p)) {
      throw ConfigError("missing task descriptor for dataset '" + ds.dataset_id + "' (" +
                        p.string() + ")");
    }
    ds.descriptor = read_task_descriptor(p);
  }
}

SubsetPlan sample_subsets(const DatasetStore& ds, std::size_t subset_size, std::size_t n_subsets,
                          std::uint64_t seed) {
  if (subset_size == 0 || n_subsets == 0) {
    throw ConfigError("subset_size and n_subsets must be at least 1");
  }
  const std::size_t n = ds.n_volumes();
  if (n == 0) throw EmptyDataError("dataset '" + ds.dataset_id + "' has no volumes");

  Rng rng(derive_seed(seed, ds.dataset_id));
  SubsetPlan plan{subset_size, n_subsets, seed, {}};
  plan.subsets.reserve(n_subsets);
  std::vector<std::size_t> pool(n);
  for (std::size_t s = 0; s < n_subsets; ++s) {
    std::vector<std::size_t> subset(subset_size);
    if (n >= subset_size) {
      // Partial Fisher-Yates over a fresh identity pool.
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      for (std::size_t i = 0; i < subset_size; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(pool[i], pool[j]);
        subset[i] = pool[i];
      }
    } else {
      for (auto& idx : subset) idx = static_cast<std::size_t>(rng.below(n));
    }
    plan.subsets.push_back(std::move(subset));
  }
  return plan;
}

}  // namespace metaseg
