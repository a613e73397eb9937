#include "metaseg/score_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "metaseg/csv.hpp"
#include "metaseg/errors.hpp"

namespace metaseg {

ScoreMatrix::ScoreMatrix(std::vector<std::string> dataset_ids, std::vector<std::string> method_ids,
                         std::vector<double> scores)
    : dataset_ids_(std::move(dataset_ids)), method_ids_(std::move(method_ids)), scores_(std::move(scores)) {
  if (std::set<std::string>(dataset_ids_.begin(), dataset_ids_.end()).size() != dataset_ids_.size()) {
    throw DataError("score matrix: duplicate dataset id");
  }
  if (std::set<std::string>(method_ids_.begin(), method_ids_.end()).size() != method_ids_.size()) {
    throw DataError("score matrix: duplicate method id");
  }
  if (scores_.size() != dataset_ids_.size() * method_ids_.size()) {
    throw ShapeError("score matrix: cell count does not match ids");
  }
  for (std::size_t i = 0; i < scores_.size(); ++i) {
    const double v = scores_[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw DataError("score for (" + dataset_ids_[i / n_methods()] + ", " + method_ids_[i % n_methods()] +
                      ") = " + csv::format_value(v) + " is outside [0, 1]");
    }
  }
}

bool ScoreMatrix::has_dataset(const std::string& id) const {
  return std::find(dataset_ids_.begin(), dataset_ids_.end(), id) != dataset_ids_.end();
}

std::size_t ScoreMatrix::dataset_index(const std::string& id) const {
  const auto it = std::find(dataset_ids_.begin(), dataset_ids_.end(), id);
  if (it == dataset_ids_.end()) throw MissingLabelError("no scores for dataset '" + id + "'");
  return static_cast<std::size_t>(it - dataset_ids_.begin());
}

ScoreMatrix ScoreMatrix::restrict_to(const std::vector<std::string>& ids) const {
  std::vector<double> cells;
  cells.reserve(ids.size() * n_methods());
  for (const auto& id : ids) {
    const std::size_t d = dataset_index(id);
    for (std::size_t m = 0; m < n_methods(); ++m) cells.push_back(at(d, m));
  }
  return ScoreMatrix(ids, method_ids_, std::move(cells));
}

ScoreMatrix read_scores(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  csv::expect_header(table, {"dataset_id", "method_id", "dice"}, path);
  std::vector<std::string> datasets, methods;
  std::map<std::pair<std::string, std::string>, double> cells;
  for (const auto& row : table.rows) {
    const auto& ds = row.fields[0];
    const auto& me = row.fields[1];
    const std::string where = path.string() + ":" + std::to_string(row.line);
    if (ds.empty() || me.empty()) throw FormatError(where + ": empty id");
    const double dice = csv::parse_double(row.fields[2], path, row.line, "dice");
    if (dice < 0.0 || dice > 1.0) throw FormatError(where + ": dice " + row.fields[2] + " outside [0, 1]");
    if (!cells.emplace(std::make_pair(ds, me), dice).second) {
      throw FormatError(where + ": duplicate score for (" + ds + ", " + me + ")");
    }
    if (std::find(datasets.begin(), datasets.end(), ds) == datasets.end()) datasets.push_back(ds);
    if (std::find(methods.begin(), methods.end(), me) == methods.end()) methods.push_back(me);
  }
  if (cells.empty()) throw EmptyDataError(path.string() + ": no scores");
  std::vector<double> scores;
  scores.reserve(datasets.size() * methods.size());
  for (const auto& ds : datasets) {
    for (const auto& me : methods) {
      const auto it = cells.find({ds, me});
      if (it == cells.end()) {
        throw MissingLabelError(path.string() + ": missing score for (" + ds + ", " + me + ")");
      }
      scores.push_back(it->second);
    }
  }
  return ScoreMatrix(std::move(datasets), std::move(methods), std::move(scores));
}

void write_scores(const ScoreMatrix& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "dataset_id,method_id,dice\n";
  for (std::size_t d = 0; d < s.n_datasets(); ++d) {
    for (std::size_t m = 0; m < s.n_methods(); ++m) {
      out << s.dataset_ids()[d] << ',' << s.method_ids()[m] << ',' << csv::format_value(s.at(d, m)) << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<double> training_means(const ScoreMatrix& s, const std::vector<std::string>& dataset_ids) {
  if (dataset_ids.empty()) throw EmptyDataError("training mean over zero datasets");
  std::vector<double> means(s.n_methods(), 0.0);
  for (const auto& id : dataset_ids) {
    const std::size_t d = s.dataset_index(id);
    for (std::size_t m = 0; m < s.n_methods(); ++m) means[m] += s.at(d, m);
  }
  for (auto& v : means) v /= static_cast<double>(dataset_ids.size());
  return means;
}

}  // namespace metaseg
