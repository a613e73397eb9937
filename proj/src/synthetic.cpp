#include "metaseg/synthetic.hpp"

#include "metaseg/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "metaseg/errors.hpp"
#include "metaseg/rng.hpp"
#include "metaseg/statfeat.hpp"

namespace metaseg::synthetic {

namespace {

std::string dataset_name(std::size_t d) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ds%02zu", d);
  return buf;
}

std::string method_name(std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "m%02zu", j);
  return buf;
}

void min_max_normalise(std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double a = *lo, span = *hi - *lo;
  for (double& x : v) x = span > 0.0 ? (x - a) / span : 0.5;
}

void make_dir(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
}

}  // namespace

Suite write_suite(const std::filesystem::path& dir, const SuiteOptions& o) {
  if (o.n_datasets < 2 || o.volumes_per_dataset == 0 || o.n_methods < 2) {
    throw ConfigError("synthetic suite needs at least 2 datasets, 1 volume and 2 methods");
  }
  make_dir(dir / "volumes");
  make_dir(dir / "descriptors");
  Rng rng(derive_seed(o.seed, "synthetic-suite"));
  const double pi = std::numbers::pi;

  // Datasets come in pairs around archetypes spread on a Latin hypercube, so a
  // held-out dataset usually has a similar one among the training datasets.
  const std::size_t n_archetypes = (o.n_datasets + 1) / 2;
  std::vector<double> level_centre(n_archetypes), noise_centre(n_archetypes);
  for (std::size_t c = 0; c < n_archetypes; ++c) {
    level_centre[c] = noise_centre[c] = (static_cast<double>(c) + 0.5) / static_cast<double>(n_archetypes);
  }
  for (auto* v : {&level_centre, &noise_centre}) {
    for (std::size_t i = v->size(); i > 1; --i) std::swap((*v)[i - 1], (*v)[rng.below(i)]);
  }
  std::vector<double> level_factor(o.n_datasets), noise_factor(o.n_datasets);
  for (std::size_t d = 0; d < o.n_datasets; ++d) {
    level_factor[d] = std::clamp(level_centre[d / 2] + 0.06 * rng.normal(), 0.0, 1.0);
    noise_factor[d] = std::clamp(noise_centre[d / 2] + 0.06 * rng.normal(), 0.0, 1.0);
  }

  Suite suite;
  std::vector<double> voxel_mean(o.n_datasets), corr_mean(o.n_datasets);
  for (std::size_t d = 0; d < o.n_datasets; ++d) {
    DatasetStore ds;
    ds.dataset_id = dataset_name(d);
    const double a = level_factor[d], b = noise_factor[d];
    const double level = 50.0 + 100.0 * a;
    const double amplitude = 50.0;
    // In-plane field variance is amplitude^2 / 4, so this noise level puts the
    // expected adjacent-slice correlation at 0.95 - 0.65 b.
    const double target_corr = 0.95 - 0.65 * b;
    const double sigma = 0.5 * amplitude * std::sqrt((1.0 - target_corr) / target_corr);
    const double freq = 2.0;
    make_dir(dir / "volumes" / ds.dataset_id);

    double sum_mean = 0.0, sum_corr = 0.0;
    for (std::size_t k = 0; k < o.volumes_per_dataset; ++k) {
      const double jitter = rng.normal() * 3.0;
      const double phase = rng.uniform() * 2.0 * pi;
      std::vector<float> voxels(o.dims.count());
      std::size_t i = 0;
      for (std::size_t z = 0; z < o.dims.z; ++z) {
        for (std::size_t y = 0; y < o.dims.y; ++y) {
          for (std::size_t x = 0; x < o.dims.x; ++x, ++i) {
            const double u = static_cast<double>(x) / static_cast<double>(o.dims.x);
            const double v = static_cast<double>(y) / static_cast<double>(o.dims.y);
            const double w = static_cast<double>(z) / static_cast<double>(std::max<std::size_t>(o.dims.z, 1));
            const double field = std::sin(2.0 * pi * freq * u + phase) * std::cos(2.0 * pi * freq * v) +
                                 0.5 * std::sin(pi * w + phase);
            voxels[i] = static_cast<float>(level + jitter + amplitude * field + sigma * rng.normal());
          }
        }
      }
      Volume vol(o.dims, std::move(voxels));
      const auto stats = statfeat::volume_stats(vol);
      sum_mean += stats.mean;
      double corr = 0.0;
      for (double r : stats.adj_corr) corr += r;
      if (!stats.adj_corr.empty()) corr /= static_cast<double>(stats.adj_corr.size());
      sum_corr += corr;

      char name[32];
      std::snprintf(name, sizeof(name), "%03zu.mlvol", k);
      const auto path = dir / "volumes" / ds.dataset_id / name;
      write_volume(vol, path);
      ds.volume_paths.push_back(path);
    }
    voxel_mean[d] = sum_mean / static_cast<double>(o.volumes_per_dataset);
    corr_mean[d] = sum_corr / static_cast<double>(o.volumes_per_dataset);

    TaskSpecificFeatures t;
    t.modality = 0.0;
    t.location_dependent = 1.0;
    t.sphere_shaped = 0.0;
    t.relative_size = 0.25;
    t.multiple_objects = 0.0;
    write_task_descriptor(t, descriptor_path(dir / "descriptors", ds.dataset_id));
    ds.descriptor = t;
    suite.datasets.push_back(std::move(ds));
  }

  write_manifest(suite.datasets, dir / "manifest.csv");

  min_max_normalise(voxel_mean);
  min_max_normalise(corr_mean);
  std::vector<std::string> dataset_ids, method_ids;
  for (const auto& ds : suite.datasets) dataset_ids.push_back(ds.dataset_id);
  for (std::size_t j = 0; j < o.n_methods; ++j) method_ids.push_back(method_name(j));
  std::vector<double> cells;
  for (std::size_t d = 0; d < o.n_datasets; ++d) {
    suite.latent[dataset_ids[d]] = {voxel_mean[d], corr_mean[d]};
    for (std::size_t j = 0; j < o.n_methods; ++j) {
      const double w = static_cast<double>(j) / static_cast<double>(o.n_methods - 1);
      const double t = w * voxel_mean[d] + (1.0 - w) * corr_mean[d];
      const double dice = 0.1 + 0.8 / (1.0 + std::exp(-6.0 * (t - 0.5))) + o.label_noise * rng.normal();
      // Stored at CSV precision so the returned matrix equals scores.csv.
      cells.push_back(std::stod(csv::format_value(std::clamp(dice, 0.0, 1.0))));
    }
  }
  suite.scores = ScoreMatrix(dataset_ids, method_ids, cells);
  write_scores(suite.scores, dir / "scores.csv");
  return suite;
}

deepfeat::TensorsByDataset write_tensors(const std::filesystem::path& dir,
                                         const std::map<std::string, std::array<double, 2>>& latent,
                                         const TensorOptions& o) {
  if (!deepfeat::is_supported_channel_count(o.channels)) {
    throw ShapeError("unsupported channel count " + std::to_string(o.channels));
  }
  if (o.informative > o.channels || o.subsets_per_dataset == 0) {
    throw ConfigError("synthetic tensors: bad informative channel or subset count");
  }
  Rng rng(derive_seed(o.seed, "synthetic-tensors"));
  constexpr std::size_t kMap = deepfeat::kMapSize;

  std::vector<float> shared(o.channels * kMap);
  for (auto& v : shared) v = static_cast<float>(rng.normal());

  deepfeat::TensorsByDataset out;
  for (const auto& [id, u] : latent) {
    std::vector<float> pattern(o.informative * kMap);
    for (auto& v : pattern) v = static_cast<float>(rng.normal());
    make_dir(dir / id);
    for (std::size_t s = 0; s < o.subsets_per_dataset; ++s) {
      deepfeat::FeatureTensor t;
      t.channels = o.channels;
      t.dataset_id = id;
      t.subset_id = s;
      t.maps.resize(o.channels * kMap);
      for (std::size_t c = 0; c < o.channels; ++c) {
        for (std::size_t p = 0; p < kMap; ++p) {
          double v;
          if (c < o.informative) {
            const double level = 4.0 * (u[c % 2] - 0.5);
            v = level + pattern[c * kMap + p] + 0.1 * rng.normal();
          } else {
            v = shared[c * kMap + p] + 0.05 * rng.normal();
          }
          // Encoder activations are non-negative after a ReLU.
          t.maps[c * kMap + p] = static_cast<float>(std::max(0.0, v + 3.0));
        }
      }
      char name[32];
      std::snprintf(name, sizeof(name), "%03zu.mlten", s);
      write_tensor(t, dir / id / name);
      out[id].push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace metaseg::synthetic
