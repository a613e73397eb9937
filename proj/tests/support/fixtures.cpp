#include "fixtures.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace fixture {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  const auto base = fs::temp_directory_path();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const auto candidate =
        base / (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create a temporary directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<char> read_bytes(const fs::path& p) {
  const auto s = read_text(p);
  return {s.begin(), s.end()};
}

bool same_tree(const fs::path& a, const fs::path& b, std::string* first_difference) {
  auto files = [](const fs::path& root) {
    std::set<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file()) out.insert(fs::relative(e.path(), root));
    }
    return out;
  };
  const auto fa = files(a), fb = files(b);
  if (fa != fb) {
    if (first_difference) *first_difference = "file lists differ";
    return false;
  }
  for (const auto& rel : fa) {
    if (read_bytes(a / rel) != read_bytes(b / rel)) {
      if (first_difference) *first_difference = rel.string();
      return false;
    }
  }
  return true;
}

std::string dataset_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ds%02zu", i);
  return buf;
}

metaseg::FeatureSet random_features(metaseg::Rng& rng, std::size_t n_datasets, std::size_t subsets, std::size_t q) {
  metaseg::FeatureSet f;
  for (std::size_t d = 0; d < n_datasets; ++d) {
    std::vector<double> centre(q);
    for (auto& c : centre) c = rng.normal();
    auto& rows = f[dataset_id(d)];
    for (std::size_t s = 0; s < subsets; ++s) {
      std::vector<double> v(q);
      for (std::size_t k = 0; k < q; ++k) v[k] = centre[k] + 0.1 * rng.normal();
      rows.push_back(std::move(v));
    }
  }
  return f;
}

metaseg::ScoreMatrix random_scores(metaseg::Rng& rng, std::size_t n_datasets, std::size_t n_methods) {
  std::vector<std::string> ds, ms;
  for (std::size_t d = 0; d < n_datasets; ++d) ds.push_back(dataset_id(d));
  for (std::size_t j = 0; j < n_methods; ++j) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "m%02zu", j);
    ms.push_back(buf);
  }
  std::vector<double> cells(n_datasets * n_methods);
  for (auto& c : cells) c = rng.uniform(0.05, 0.95);
  return metaseg::ScoreMatrix(ds, ms, cells);
}

}  // namespace fixture
