#include "metaseg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include "metaseg/csv.hpp"
#include "metaseg/errors.hpp"
#include "metaseg/parallel.hpp"
#include "metaseg/rng.hpp"

namespace metaseg::evaluation {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(what) + ": lengths " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()) + " differ");
  }
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

Stat make_stat(const std::vector<double>& values) {
  Stat s;
  s.count = values.size();
  if (values.empty()) {
    s.mean = std::numeric_limits<double>::quiet_NaN();
    s.std = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::uint64_t binomial_saturating(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    const std::uint64_t num = n - k + i;
    if (r > std::numeric_limits<std::uint64_t>::max() / num) return std::numeric_limits<std::uint64_t>::max();
    r = r * num / i;
  }
  return r;
}

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double mae(std::span<const double> y, std::span<const double> yhat) {
  check_pair(y, yhat, "mae");
  if (y.empty()) throw EmptyDataError("mae of zero samples");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - yhat[i]);
  return s / static_cast<double>(y.size());
}

double nmae(std::span<const double> y, std::span<const double> yhat, std::span<const double> ybar) {
  check_pair(y, yhat, "nmae");
  check_pair(y, ybar, "nmae");
  if (y.empty()) throw EmptyDataError("nmae of zero samples");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += std::abs(y[i] - yhat[i]);
    den += std::abs(y[i] - ybar[i]);
  }
  if (!(den > 0.0)) throw DegenerateBaselineError("nmae: baseline error is zero");
  return num / den;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b, "spearman");
  if (a.size() < 2) throw InsufficientDataError("spearman needs at least 2 values");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

SplitMode parse_split_mode(const std::string& name) {
  if (name == "random") return SplitMode::kRandom;
  if (name == "exhaustive") return SplitMode::kExhaustive;
  throw ConfigError("unknown split mode '" + name + "' (expected random or exhaustive)");
}

std::string split_mode_name(SplitMode mode) { return mode == SplitMode::kRandom ? "random" : "exhaustive"; }

SplitPlan make_splits(std::vector<std::string> ids, std::size_t train_size, std::size_t test_size, SplitMode mode,
                      std::size_t n_folds, std::uint64_t seed) {
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw ConfigError("make_splits: duplicate dataset id");
  const std::size_t n = ids.size();
  if (train_size == 0 || test_size == 0 || train_size + test_size > n) {
    throw ConfigError("make_splits: cannot take " + std::to_string(train_size) + " training and " +
                      std::to_string(test_size) + " test datasets from " + std::to_string(n));
  }
  SplitPlan plan;
  plan.mode = mode;
  plan.seed = seed;

  if (mode == SplitMode::kExhaustive) {
    std::vector<std::size_t> pick(test_size);
    std::iota(pick.begin(), pick.end(), std::size_t{0});
    while (true) {
      Fold f;
      std::vector<bool> in_test(n, false);
      for (std::size_t p : pick) {
        in_test[p] = true;
        f.test_ids.push_back(ids[p]);
      }
      for (std::size_t i = 0; i < n && f.train_ids.size() < train_size; ++i) {
        if (!in_test[i]) f.train_ids.push_back(ids[i]);
      }
      plan.folds.push_back(std::move(f));
      // Next combination in lexicographic order.
      std::size_t k = test_size;
      while (k > 0 && pick[k - 1] == n - test_size + (k - 1)) --k;
      if (k == 0) break;
      ++pick[k - 1];
      for (std::size_t i = k; i < test_size; ++i) pick[i] = pick[i - 1] + 1;
    }
    return plan;
  }

  if (n_folds == 0) throw ConfigError("make_splits: random mode needs at least one fold");
  if (binomial_saturating(n, test_size) < n_folds) {
    throw ConfigError("make_splits: only " + std::to_string(binomial_saturating(n, test_size)) +
                      " distinct test sets exist, " + std::to_string(n_folds) + " requested");
  }
  const bool need_coverage = n_folds * test_size >= n;
  Rng rng(derive_seed(seed, "splits"));
  constexpr int kMaxAttempts = 10000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    plan.folds.clear();
    std::set<std::vector<std::string>> seen;
    while (plan.folds.size() < n_folds) {
      std::vector<std::size_t> pool(n);
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      for (std::size_t i = 0; i < n; ++i) std::swap(pool[i], pool[i + rng.below(n - i)]);
      Fold f;
      for (std::size_t i = 0; i < test_size; ++i) f.test_ids.push_back(ids[pool[i]]);
      for (std::size_t i = test_size; i < test_size + train_size; ++i) f.train_ids.push_back(ids[pool[i]]);
      std::sort(f.test_ids.begin(), f.test_ids.end());
      std::sort(f.train_ids.begin(), f.train_ids.end());
      if (seen.insert(f.test_ids).second) plan.folds.push_back(std::move(f));
    }
    if (!need_coverage) break;
    std::set<std::string> tested;
    for (const auto& f : plan.folds) tested.insert(f.test_ids.begin(), f.test_ids.end());
    if (tested.size() == n) break;
  }
  return plan;
}

FoldFeatures prepare_fold_features(const FeatureSource& source, const Fold& fold) {
  FoldFeatures out;
  if (const auto* fixed = std::get_if<FixedFeatures>(&source)) {
    auto take = [&](const std::string& id, FeatureSet& into) {
      const auto it = fixed->features.find(id);
      if (it == fixed->features.end() || it->second.empty()) {
        throw ConsistencyError("no feature vectors for dataset '" + id + "'");
      }
      into[id] = it->second;
    };
    for (const auto& id : fold.train_ids) take(id, out.train);
    for (const auto& id : fold.test_ids) take(id, out.test);
    return out;
  }

  const auto& deep = std::get<DeepFeatures>(source);
  deepfeat::TensorsByDataset training;
  for (const auto& id : fold.train_ids) {
    const auto it = deep.tensors.find(id);
    if (it == deep.tensors.end() || it->second.empty()) {
      throw ConsistencyError("no feature tensors for dataset '" + id + "'");
    }
    training[id] = it->second;
  }
  out.postprocessing = fit_deep_postprocessing(training, deep.alpha, deep.selector);
  auto apply = [&](const std::string& id, FeatureSet& into) {
    const auto it = deep.tensors.find(id);
    if (it == deep.tensors.end() || it->second.empty()) {
      throw ConsistencyError("no feature tensors for dataset '" + id + "'");
    }
    const auto task = deep.tasks.find(id);
    if (task == deep.tasks.end()) throw ConsistencyError("no task descriptor for dataset '" + id + "'");
    auto& vectors = into[id];
    for (const auto& t : it->second) vectors.push_back(deep_vector(*out.postprocessing, t, task->second));
  };
  for (const auto& id : fold.train_ids) apply(id, out.train);
  for (const auto& id : fold.test_ids) apply(id, out.test);
  return out;
}

EvalReport summarize(const std::vector<PredictionRecord>& records, const std::vector<std::string>& dataset_order,
                     const std::vector<std::string>& method_order, const std::string& learner) {
  if (records.empty()) throw EmptyDataError("summarize: no prediction records");
  EvalReport r;
  r.learner = learner;
  r.predictions = records;

  std::map<std::size_t, std::vector<const PredictionRecord*>> by_fold;
  for (const auto& rec : records) by_fold[rec.fold].push_back(&rec);
  r.n_folds = by_fold.size();

  std::map<std::string, std::vector<double>> dataset_samples, method_samples;
  std::vector<double> fold_mae, fold_nmae, task_corr;
  for (const auto& [fold, recs] : by_fold) {
    std::map<std::string, std::vector<const PredictionRecord*>> by_dataset, by_method;
    double abs_err = 0.0, base_err = 0.0;
    for (const auto* rec : recs) {
      by_dataset[rec->dataset_id].push_back(rec);
      by_method[rec->method_id].push_back(rec);
      abs_err += std::abs(rec->truth - rec->predicted);
      base_err += std::abs(rec->truth - rec->baseline);
    }
    fold_mae.push_back(abs_err / static_cast<double>(recs.size()));
    if (!(base_err > 0.0)) {
      throw DegenerateBaselineError("fold " + std::to_string(fold) + ": baseline error is zero, NMAE undefined");
    }
    fold_nmae.push_back(abs_err / base_err);

    std::vector<std::string> test_order;
    for (const auto& id : dataset_order) {
      if (by_dataset.contains(id)) test_order.push_back(id);
    }
    for (const auto& [id, _] : by_dataset) {
      if (std::find(test_order.begin(), test_order.end(), id) == test_order.end()) test_order.push_back(id);
    }
    std::vector<double> mean_pred, mean_true;
    for (const auto& id : test_order) {
      const auto& rs = by_dataset[id];
      std::vector<double> y, yhat;
      for (const auto* rec : rs) {
        y.push_back(rec->truth);
        yhat.push_back(rec->predicted);
      }
      for (std::size_t i = 0; i < y.size(); ++i) dataset_samples[id].push_back(std::abs(y[i] - yhat[i]));
      mean_true.push_back(std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size()));
      mean_pred.push_back(std::accumulate(yhat.begin(), yhat.end(), 0.0) / static_cast<double>(yhat.size()));
      if (y.size() >= 2) r.rank_corr.push_back(spearman(yhat, y));
    }
    if (mean_true.size() >= 2) task_corr.push_back(spearman(mean_pred, mean_true));
    for (const auto& [id, rs] : by_method) {
      for (const auto* rec : rs) method_samples[id].push_back(std::abs(rec->truth - rec->predicted));
    }
  }

  auto fill_rows = [](const std::vector<std::string>& order, std::map<std::string, std::vector<double>>& samples,
                      std::vector<std::string>& ids, std::vector<Stat>& stats) {
    for (const auto& id : order) {
      const auto it = samples.find(id);
      if (it == samples.end()) continue;
      ids.push_back(id);
      stats.push_back(make_stat(it->second));
      samples.erase(it);
    }
    for (const auto& [id, values] : samples) {
      ids.push_back(id);
      stats.push_back(make_stat(values));
    }
  };
  fill_rows(dataset_order, dataset_samples, r.dataset_ids, r.per_dataset);
  fill_rows(method_order, method_samples, r.method_ids, r.per_method);
  r.overall_mae = make_stat(fold_mae);
  r.overall_nmae = make_stat(fold_nmae);
  r.method_rank_corr = make_stat(r.rank_corr);
  r.task_rank_corr = make_stat(task_corr);
  return r;
}

EvalReport run_crossval(const FeatureSource& source, const ScoreMatrix& scores, const SplitPlan& splits,
                        const CrossvalOptions& options) {
  if (splits.folds.empty()) throw ConfigError("run_crossval: split plan has no folds");
  std::vector<std::vector<PredictionRecord>> per_fold(splits.folds.size());
  metalearn::BankConfig bank_config = options.bank;
  if (options.jobs > 1) bank_config.jobs = 1;

  parallel_for(splits.folds.size(), options.jobs, [&](std::size_t k) {
    const Fold& fold = splits.folds[k];
    try {
      std::set<std::string> train(fold.train_ids.begin(), fold.train_ids.end());
      for (const auto& id : fold.test_ids) {
        if (train.contains(id)) throw ConfigError("dataset '" + id + "' is in both train and test");
      }
      for (const auto& id : fold.train_ids) {
        if (!scores.has_dataset(id)) throw ConsistencyError("dataset '" + id + "' has features but no scores");
      }
      for (const auto& id : fold.test_ids) {
        if (!scores.has_dataset(id)) throw ConsistencyError("dataset '" + id + "' has features but no scores");
      }
      const FoldFeatures features = prepare_fold_features(source, fold);
      // Only training rows of the score matrix reach any fitting step.
      const ScoreMatrix train_scores = scores.restrict_to(fold.train_ids);
      const auto bank = metalearn::train_bank(features.train, train_scores, options.kind, options.seed, bank_config);
      const auto baseline = training_means(train_scores, fold.train_ids);
      if (options.observer) options.observer(k, FoldArtifacts{bank, features.postprocessing});

      auto& records = per_fold[k];
      for (const auto& id : fold.test_ids) {
        const auto predicted = metalearn::predict_dataset(bank, features.test.at(id));
        const std::size_t d = scores.dataset_index(id);
        for (std::size_t j = 0; j < scores.n_methods(); ++j) {
          records.push_back({k, id, scores.method_ids()[j], scores.at(d, j), predicted[j], baseline[j]});
        }
      }
    } catch (const Error&) {
      rethrow_with_context("fold " + std::to_string(k) + ": ");
    }
  });

  std::vector<PredictionRecord> all;
  for (auto& recs : per_fold) all.insert(all.end(), recs.begin(), recs.end());
  return summarize(all, scores.dataset_ids(), scores.method_ids(), metalearn::learner_name(options.kind));
}

std::string format_pm(const Stat& s) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f \xC2\xB1 %.2f", s.mean, s.std);
  return buf;
}

void emit_report(const EvalReport& r, const std::filesystem::path& dir) {
  if (r.predictions.empty() || r.per_dataset.empty() || r.per_method.empty()) {
    throw EmptyDataError("emit_report: report is empty");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create report directory " + dir.string() + ": " + ec.message());

  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    return out;
  };
  auto close = [&](std::ofstream& out, const char* name) {
    out.flush();
    if (!out) throw IoError("write failed: " + (dir / name).string());
  };
  auto table = [&](const char* name, const std::vector<std::string>& ids, const std::vector<Stat>& stats) {
    auto out = open(name);
    out << "id,mae_mean,mae_std\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out << ids[i] << ',' << csv::format_value(stats[i].mean) << ',' << csv::format_value(stats[i].std) << '\n';
    }
    out << "Total," << csv::format_value(r.overall_mae.mean) << ',' << csv::format_value(r.overall_mae.std) << '\n';
    close(out, name);
  };
  table("per_dataset.csv", r.dataset_ids, r.per_dataset);
  table("per_method.csv", r.method_ids, r.per_method);

  {
    auto out = open("summary.csv");
    out << "metric,mean,std,count\n";
    auto row = [&](const char* name, const Stat& s) {
      out << name << ',' << csv::format_value(s.mean) << ',' << csv::format_value(s.std) << ',' << s.count << '\n';
    };
    row("mae", r.overall_mae);
    row("nmae", r.overall_nmae);
    row("method_rank_corr", r.method_rank_corr);
    row("task_rank_corr", r.task_rank_corr);
    close(out, "summary.csv");
  }
  {
    auto out = open("predictions.csv");
    out << "fold,dataset_id,method_id,true_dice,predicted_dice,baseline_dice\n";
    for (const auto& p : r.predictions) {
      out << p.fold << ',' << p.dataset_id << ',' << p.method_id << ',' << exact(p.truth) << ','
          << exact(p.predicted) << ',' << exact(p.baseline) << '\n';
    }
    close(out, "predictions.csv");
  }
  {
    auto out = open("report.txt");
    std::size_t width = 7;
    for (const auto& id : r.dataset_ids) width = std::max(width, id.size());
    for (const auto& id : r.method_ids) width = std::max(width, id.size());
    auto line = [&](const std::string& index, const std::string& id, const std::string& value) {
      char buf[512];
      std::snprintf(buf, sizeof(buf), "%4s  %-*s  %s\n", index.c_str(), static_cast<int>(width), id.c_str(),
                    value.c_str());
      out << buf;
    };
    out << "Cross-validation report: learner " << r.learner << ", " << r.n_folds << " folds\n\n";
    out << "Mean absolute error per dataset\n";
    for (std::size_t i = 0; i < r.dataset_ids.size(); ++i) {
      line(std::to_string(i + 1), r.dataset_ids[i], format_pm(r.per_dataset[i]));
    }
    line("", "Total", format_pm(r.overall_mae));
    out << "\nMean absolute error per method\n";
    for (std::size_t i = 0; i < r.method_ids.size(); ++i) {
      line(std::to_string(i + 1), r.method_ids[i], format_pm(r.per_method[i]));
    }
    line("", "Total", format_pm(r.overall_mae));
    out << "\nOverall\n";
    line("", "MAE", format_pm(r.overall_mae));
    line("", "NMAE", format_pm(r.overall_nmae));
    line("", "Method rank correlation", format_pm(r.method_rank_corr));
    line("", "Task rank correlation", format_pm(r.task_rank_corr));
    close(out, "report.txt");
  }
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  csv::expect_header(table, {"fold", "dataset_id", "method_id", "true_dice", "predicted_dice", "baseline_dice"},
                     path);
  std::vector<PredictionRecord> out;
  for (const auto& row : table.rows) {
    PredictionRecord p;
    p.fold = csv::parse_count(row.fields[0], path, row.line, "fold");
    p.dataset_id = row.fields[1];
    p.method_id = row.fields[2];
    p.truth = csv::parse_double(row.fields[3], path, row.line, "true_dice");
    p.predicted = csv::parse_double(row.fields[4], path, row.line, "predicted_dice");
    p.baseline = csv::parse_double(row.fields[5], path, row.line, "baseline_dice");
    out.push_back(std::move(p));
  }
  if (out.empty()) throw EmptyDataError(path.string() + ": no prediction rows");
  return out;
}

}  // namespace metaseg::evaluation
