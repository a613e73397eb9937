#pragma once

#include <array>
#include <filesystem>
#include <string>

namespace metaseg {

/// The five user-supplied task descriptors, each in [0, 1].
struct TaskSpecificFeatures {
  double modality = 0.0;
  double location_dependent = 0.0;
  double sphere_shaped = 0.0;
  double relative_size = 0.0;
  double multiple_objects = 0.0;

  static constexpr std::size_t kCount = 5;
  static constexpr std::array<const char*, kCount> kKeys = {
      "modality", "location_dependent", "sphere_shaped", "relative_size", "multiple_objects"};

  std::array<double, kCount> values() const {
    return {modality, location_dependent, sphere_shaped, relative_size, multiple_objects};
  }

  /// Throws DataError when any value is outside [0, 1] or not finite.
  void validate() const;

  bool operator==(const TaskSpecificFeatures&) const = default;
};

/// Parses `key=value` lines; blank lines and `#` comments are ignored. All five
/// keys are required exactly once.
TaskSpecificFeatures read_task_descriptor(const std::filesystem::path& path);
void write_task_descriptor(const TaskSpecificFeatures& t, const std::filesystem::path& path);

/// Canonical descriptor location for a dataset: `<dir>/<dataset_id>.task`.
std::filesystem::path descriptor_path(const std::filesystem::path& dir, const std::string& dataset_id);

}  // namespace metaseg
