#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metaseg/task_features.hpp"

namespace metaseg {

struct Dims {
  std::size_t x = 1;  // in-plane width
  std::size_t y = 1;  // in-plane height
  std::size_t z = 1;  // slice count

  std::size_t slice_size() const { return x * y; }
  std::size_t count() const { return x * y * z; }
  bool operator==(const Dims&) const = default;
};

/// A 3D scalar image. Voxels are stored slice-major: index = (z * Y + y) * X + x.
/// Construction validates the invariants (positive dims, matching length,
/// finite values), so every live Volume is well formed.
class Volume {
 public:
  Volume(Dims dims, std::vector<float> voxels);

  const Dims& dims() const { return dims_; }
  std::span<const float> voxels() const { return voxels_; }
  std::span<const float> slice(std::size_t k) const;

  float at(std::size_t x, std::size_t y, std::size_t z) const {
    return voxels_[(z * dims_.y + y) * dims_.x + x];
  }

  /// Bitwise comparison of voxels.
  bool operator==(const Volume& other) const;

 private:
  Dims dims_;
  std::vector<float> voxels_;
};

Volume read_volume(const std::filesystem::path& path);
void write_volume(const Volume& v, const std::filesystem::path& path);

struct DatasetStore {
  std::string dataset_id;
  std::vector<std::filesystem::path> volume_paths;
  std::optional<TaskSpecificFeatures> descriptor;

  std::size_t n_volumes() const { return volume_paths.size(); }
};

/// Reads a `dataset_id,volume_path` CSV. Relative volume paths resolve against
/// the manifest's directory. Datasets keep first-appearance order.
std::vector<DatasetStore> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<DatasetStore>& datasets, const std::filesystem::path& path);

/// Attaches `<dir>/<dataset_id>.task` to every dataset. A missing file is a
/// ConfigError naming the dataset.
void attach_descriptors(std::vector<DatasetStore>& datasets, const std::filesystem::path& dir);

struct SubsetPlan {
  std::size_t subset_size = 0;
  std::size_t n_subsets = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> subsets;

  bool operator==(const SubsetPlan&) const = default;
};

/// Draws `n_subsets` independent subsets of volume indices. Within a subset the
/// draw is without replacement when the dataset has at least `subset_size`
/// volumes and with replacement otherwise. The generator is seeded from
/// `seed` mixed with the FNV-1a hash of the dataset id.
SubsetPlan sample_subsets(const DatasetStore& ds, std::size_t subset_size, std::size_t n_subsets,
                          std::uint64_t seed);

}  // namespace metaseg
