#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "metaseg/deepfeat.hpp"
#include "metaseg/evaluation.hpp"
#include "metaseg/mlp.hpp"
#include "metaseg/svr.hpp"

namespace metaseg {

/// Every tunable of a run. Defaults follow the reference protocol.
///
/// File grammar: one `key = value` per line, `#` starts a comment, and a
/// `[section]` header prefixes the keys that follow it. Top-level keys are
/// subset_size, n_subsets, hist_bins, mi_bins, alpha and seed; sections are
/// [svr] (C, epsilon, tol, gamma), [mlp] (epochs, batch, lr, optimizer,
/// dropout), [cv] (train, test, mode, folds) and [selector] (epochs, lr,
/// lambda). Unknown keys, duplicate keys and out-of-range values raise
/// ConfigError naming the line.
struct RunConfig {
  std::size_t subset_size = 20;
  std::size_t n_subsets = 100;
  std::size_t hist_bins = 256;
  std::size_t mi_bins = 64;
  double alpha = deepfeat::kDefaultAlpha;
  std::optional<std::uint64_t> seed;

  metalearn::SvrParams svr;
  metalearn::MlpConfig mlp;
  deepfeat::SelectorOptions selector;

  std::size_t cv_train = 7;
  std::size_t cv_test = 3;
  evaluation::SplitMode cv_mode = evaluation::SplitMode::kRandom;
  std::size_t cv_folds = 10;

  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig read_config(const std::filesystem::path& path);

/// Renders every field in the file grammar; parse_config(to_string(c)) == c.
std::string to_string(const RunConfig& c);

}  // namespace metaseg
