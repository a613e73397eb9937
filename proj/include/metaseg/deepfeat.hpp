#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace metaseg::deepfeat {

inline constexpr std::size_t kMapSide = 7;
inline constexpr std::size_t kMapSize = kMapSide * kMapSide;
inline constexpr double kDefaultAlpha = 0.80;

/// Encoder widths accepted on ingest: VGG16 (512), ResNet50 (2048),
/// MobileNetV1 (1024).
bool is_supported_channel_count(std::size_t z);

/// Subset-averaged encoder output: `channels` maps of 7x7, channel-major.
struct FeatureTensor {
  std::size_t channels = 0;
  std::vector<float> maps;
  std::string dataset_id;
  std::size_t subset_id = 0;

  std::span<const float> map(std::size_t c) const {
    return std::span<const float>(maps).subspan(c * kMapSize, kMapSize);
  }
  /// Throws ShapeError / DataError on a broken invariant.
  void validate() const;
  bool operator==(const FeatureTensor&) const = default;
};

FeatureTensor ingest_tensor(const std::filesystem::path& path);
void write_tensor(const FeatureTensor& t, const std::filesystem::path& path);
/// Every `*.mlten` file under `dir`, in sorted path order.
std::vector<FeatureTensor> ingest_tensor_dir(const std::filesystem::path& dir);

using TensorsByDataset = std::map<std::string, std::vector<FeatureTensor>>;

struct BinarizationModel {
  double alpha = kDefaultAlpha;
  std::vector<std::uint8_t> informative;  // 1 when the channel's cross-dataset correlation < alpha
  std::vector<double> channel_median;     // median over training tensors of the channel mean
  std::vector<double> correlation;        // mean |Pearson| over dataset pairs, per channel

  std::size_t channels() const { return informative.size(); }
  bool operator==(const BinarizationModel&) const = default;
};

/// Mean of one 7x7 map, summed in index order.
double map_mean(std::span<const float> map);

BinarizationModel fit_binarizer(const TensorsByDataset& training, double alpha = kDefaultAlpha);

/// Per-channel bits: 1 iff the channel is informative and its map mean is
/// strictly above the training median.
std::vector<double> binarize(const FeatureTensor& t, const BinarizationModel& m);

/// Hyperparameters of the one-vs-rest hinge-loss classifiers behind the
/// selection threshold. Full-batch subgradient descent on
///   lambda/2 |w|^2 + mean(max(0, 1 - y (w.x + b)))
/// with features centred by their training mean; the bias is unregularised.
struct SelectorOptions {
  double learning_rate = 0.1;
  double lambda = 1e-3;
  std::size_t epochs = 100;
  bool operator==(const SelectorOptions&) const = default;
};

struct SelectionModel {
  std::vector<std::size_t> kept_indices;
  std::vector<double> importance;  // max over classes of |weight|
  double tau = 0.0;                // mean importance

  bool operator==(const SelectionModel&) const = default;
};

SelectionModel fit_selector(const std::vector<std::vector<double>>& vectors,
                            const std::vector<std::string>& labels, const SelectorOptions& options = {});

std::vector<double> select(std::span<const double> v, const SelectionModel& m);

void save_binarizer(const BinarizationModel& m, const std::filesystem::path& path);
BinarizationModel load_binarizer(const std::filesystem::path& path);
void save_selector(const SelectionModel& m, const std::filesystem::path& path);
SelectionModel load_selector(const std::filesystem::path& path);

}  // namespace metaseg::deepfeat
