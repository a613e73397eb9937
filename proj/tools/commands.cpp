#include "commands.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "metaseg/config.hpp"
#include "metaseg/csv.hpp"
#include "metaseg/deepfeat.hpp"
#include "metaseg/errors.hpp"
#include "metaseg/evaluation.hpp"
#include "metaseg/feature_table.hpp"
#include "metaseg/pipeline.hpp"
#include "metaseg/regressor_bank.hpp"
#include "metaseg/rng.hpp"
#include "metaseg/score_matrix.hpp"
#include "metaseg/synthetic.hpp"
#include "metaseg/volume_io.hpp"

namespace fs = std::filesystem;

namespace metaseg::cli {

namespace {

struct Global {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::size_t jobs = 1;
};

bool ci_mode() {
  const char* v = std::getenv("CI");
  if (v == nullptr) return false;
  const std::string s(v);
  return !s.empty() && s != "0" && s != "false";
}

// The command-line seed wins over the config file; CI runs must pass it.
RunConfig load_config(const Global& g) {
  RunConfig c = g.config.empty() ? RunConfig{} : read_config(g.config);
  if (g.seed) {
    c.seed = g.seed;
  } else if (ci_mode()) {
    throw ConfigError("--seed is required when CI is set");
  }
  if (!c.seed) c.seed = 0;
  return c;
}

fs::path out_dir(const Global& g) {
  const fs::path dir(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

metalearn::BankConfig bank_config(const RunConfig& c, std::size_t jobs) {
  metalearn::BankConfig b;
  b.svr = c.svr;
  b.mlp = c.mlp;
  b.jobs = jobs;
  return b;
}

std::vector<std::string> split_ids(const std::string& list) {
  std::vector<std::string> ids;
  std::stringstream in(list);
  std::string id;
  while (std::getline(in, id, ',')) {
    if (!id.empty()) ids.push_back(id);
  }
  if (ids.empty()) throw ConfigError("empty dataset id list");
  return ids;
}

std::map<std::string, TaskSpecificFeatures> read_tasks(const fs::path& dir, const std::vector<std::string>& ids) {
  std::map<std::string, TaskSpecificFeatures> tasks;
  for (const auto& id : ids) {
    const auto p = descriptor_path(dir, id);
    if (!fs::exists(p)) throw ConfigError("missing task descriptor for dataset '" + id + "' (" + p.string() + ")");
    tasks[id] = read_task_descriptor(p);
  }
  return tasks;
}

void check_scores_cover(const std::vector<std::string>& ids, const ScoreMatrix& scores) {
  for (const auto& id : ids) {
    if (!scores.has_dataset(id)) throw ConsistencyError("dataset '" + id + "' has features but no scores");
  }
}

std::string pm4(const evaluation::Stat& s) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f \xC2\xB1 %.4f", s.mean, s.std);
  return buf;
}

// ---- extract-stat ----------------------------------------------------------

struct ExtractStatArgs {
  std::string manifest;
  std::string descriptors;
};

void extract_stat(const Global& g, const ExtractStatArgs& a) {
  const RunConfig c = load_config(g);
  auto datasets = read_manifest(a.manifest);
  attach_descriptors(datasets, a.descriptors);
  StatExtractOptions o;
  o.subset_size = c.subset_size;
  o.n_subsets = c.n_subsets;
  o.hist_bins = c.hist_bins;
  o.mi_bins = c.mi_bins;
  o.seed = *c.seed;
  o.jobs = g.jobs;
  const auto table = extract_stat_features(datasets, o);
  const auto path = out_dir(g) / "stat_features.csv";
  write_features(table, path);
  std::cout << "wrote " << table.rows.size() << " rows to " << path.string() << '\n';
}

// ---- postprocess-deep ------------------------------------------------------

struct PostprocessArgs {
  std::string tensors;
  std::string manifest;
  std::string descriptors;
  std::string models;
  std::string train_ids;
};

void postprocess_deep(const Global& g, const PostprocessArgs& a) {
  const RunConfig c = load_config(g);
  const auto datasets = read_manifest(a.manifest);
  std::vector<std::string> ids;
  for (const auto& ds : datasets) ids.push_back(ds.dataset_id);
  const auto tasks = read_tasks(a.descriptors, ids);

  auto all = group_tensors(deepfeat::ingest_tensor_dir(a.tensors));
  deepfeat::TensorsByDataset listed;
  for (const auto& id : ids) {
    auto it = all.find(id);
    if (it == all.end()) throw ConfigError("no feature tensors for dataset '" + id + "' under " + a.tensors);
    listed[id] = std::move(it->second);
  }

  const fs::path dir = out_dir(g);
  DeepPostprocessing post;
  if (!a.models.empty()) {
    post.binarizer = deepfeat::load_binarizer(fs::path(a.models) / "binarizer.mlbin");
    post.selector = deepfeat::load_selector(fs::path(a.models) / "selector.mlsel");
  } else {
    deepfeat::TensorsByDataset training;
    const auto train = a.train_ids.empty() ? ids : split_ids(a.train_ids);
    for (const auto& id : train) {
      const auto it = listed.find(id);
      if (it == listed.end()) throw ConfigError("training dataset '" + id + "' is not in the manifest");
      training[id] = it->second;
    }
    post = fit_deep_postprocessing(training, c.alpha, c.selector);
    deepfeat::save_binarizer(post.binarizer, dir / "binarizer.mlbin");
    deepfeat::save_selector(post.selector, dir / "selector.mlsel");
  }
  const auto table = deep_feature_table(post, listed, tasks);
  write_features(table, dir / "deep_features.csv");
  std::cout << "channels " << post.binarizer.channels() << ", kept " << post.selector.kept_indices.size()
            << ", wrote " << table.rows.size() << " rows to " << (dir / "deep_features.csv").string() << '\n';
}

// ---- crossval --------------------------------------------------------------

struct CrossvalArgs {
  std::string features;
  std::string tensors;
  std::string descriptors;
  std::string scores;
  std::string learner = "svr";
};

void crossval(const Global& g, const CrossvalArgs& a) {
  const RunConfig c = load_config(g);
  if (a.features.empty() == a.tensors.empty()) throw ConfigError("crossval needs exactly one of --features or --tensors");
  const auto kind = metalearn::parse_learner_kind(a.learner);
  const auto scores = read_scores(a.scores);

  evaluation::FeatureSource source;
  std::vector<std::string> ids;
  if (!a.features.empty()) {
    const auto table = read_features(a.features);
    if (table.rows.empty()) throw EmptyDataError(a.features + ": no feature rows");
    ids = table.dataset_ids();
    source = evaluation::FixedFeatures{table.by_dataset()};
  } else {
    if (a.descriptors.empty()) throw ConfigError("--tensors needs --descriptors");
    evaluation::DeepFeatures deep;
    deep.tensors = group_tensors(deepfeat::ingest_tensor_dir(a.tensors));
    if (deep.tensors.empty()) throw EmptyDataError("no feature tensors under " + a.tensors);
    for (const auto& [id, _] : deep.tensors) ids.push_back(id);
    deep.tasks = read_tasks(a.descriptors, ids);
    deep.alpha = c.alpha;
    deep.selector = c.selector;
    source = std::move(deep);
  }
  check_scores_cover(ids, scores);

  const auto splits = evaluation::make_splits(ids, c.cv_train, c.cv_test, c.cv_mode, c.cv_folds, *c.seed);
  evaluation::CrossvalOptions o;
  o.kind = kind;
  o.bank = bank_config(c, 1);
  o.seed = *c.seed;
  o.jobs = g.jobs;
  const auto report = evaluation::run_crossval(source, scores, splits, o);
  const fs::path dir = out_dir(g);
  evaluation::emit_report(report, dir);
  std::cout << "learner " << report.learner << ", " << report.n_folds << " folds\n"
            << "MAE  " << pm4(report.overall_mae) << '\n'
            << "NMAE " << pm4(report.overall_nmae) << '\n';
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string features;
  std::string scores;
  std::string learner = "svr";
  std::string train_ids;
};

void train(const Global& g, const TrainArgs& a) {
  const RunConfig c = load_config(g);
  const auto kind = metalearn::parse_learner_kind(a.learner);
  const auto table = read_features(a.features);
  if (table.rows.empty()) throw EmptyDataError(a.features + ": no feature rows");
  const auto scores = read_scores(a.scores);
  auto all = table.by_dataset();

  FeatureSet features;
  const auto ids = a.train_ids.empty() ? table.dataset_ids() : split_ids(a.train_ids);
  for (const auto& id : ids) {
    auto it = all.find(id);
    if (it == all.end()) throw ConfigError("training dataset '" + id + "' has no feature rows");
    features[id] = std::move(it->second);
  }
  check_scores_cover(ids, scores);
  const auto bank = metalearn::train_bank(features, scores.restrict_to(ids), kind, *c.seed, bank_config(c, g.jobs));
  const auto path = out_dir(g) / "bank.mlbank";
  metalearn::save_bank(bank, path);
  std::cout << "trained " << bank.method_ids.size() << " " << metalearn::learner_name(kind) << " regressors on "
            << ids.size() << " datasets, wrote " << path.string() << '\n';
}

// ---- predict ---------------------------------------------------------------

struct PredictArgs {
  std::string bank;
  std::string features;
};

void predict(const Global& g, const PredictArgs& a) {
  const auto bank = metalearn::load_bank(a.bank);
  const auto table = read_features(a.features);
  if (table.rows.empty()) throw EmptyDataError(a.features + ": no feature rows");
  const auto ids = table.dataset_ids();
  if (ids.size() != 1) {
    throw DataError(a.features + ": expected rows of one dataset, found " + std::to_string(ids.size()));
  }
  if (static_cast<Eigen::Index>(table.width()) != bank.inputs()) {
    throw ShapeError(a.features + ": rows have " + std::to_string(table.width()) + " features, expected q' = " +
                     std::to_string(bank.inputs()));
  }
  const auto predicted = metalearn::predict_dataset(bank, table.by_dataset().begin()->second);
  const auto path = out_dir(g) / "predictions.csv";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "method_id,predicted_dice\n";
  for (std::size_t j = 0; j < predicted.size(); ++j) {
    out << bank.method_ids[j] << ',' << csv::format_value(predicted[j]) << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
  std::cout << "wrote " << predicted.size() << " predictions for " << ids.front() << " to " << path.string() << '\n';
}

// ---- report ----------------------------------------------------------------

struct ReportArgs {
  std::string predictions;
  std::string learner = "unknown";
};

void report(const Global& g, const ReportArgs& a) {
  const auto records = evaluation::read_predictions(a.predictions);
  // Tables list ids in sorted order.
  std::set<std::string> seen_d, seen_m;
  for (const auto& r : records) {
    seen_d.insert(r.dataset_id);
    seen_m.insert(r.method_id);
  }
  const std::vector<std::string> datasets(seen_d.begin(), seen_d.end()), methods(seen_m.begin(), seen_m.end());
  const auto rep = evaluation::summarize(records, datasets, methods, a.learner);
  evaluation::emit_report(rep, out_dir(g));
  std::cout << "MAE  " << pm4(rep.overall_mae) << '\n' << "NMAE " << pm4(rep.overall_nmae) << '\n';
}

// ---- make-fixture ----------------------------------------------------------

struct FixtureArgs {
  synthetic::SuiteOptions suite;
  std::size_t channels = 0;
  std::size_t subsets = 20;
};

void make_fixture(const Global& g, FixtureArgs a) {
  const RunConfig c = load_config(g);
  a.suite.seed = *c.seed;
  const fs::path dir = out_dir(g);
  const auto suite = synthetic::write_suite(dir, a.suite);
  std::cout << "wrote " << suite.datasets.size() << " datasets to " << dir.string() << '\n';
  if (a.channels > 0) {
    synthetic::TensorOptions t;
    t.channels = a.channels;
    t.informative = std::min<std::size_t>(48, a.channels);
    t.subsets_per_dataset = a.subsets;
    t.seed = derive_seed(*c.seed, "fixture-tensors");
    synthetic::write_tensors(dir / "tensors", suite.latent, t);
  }
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Meta-learning toolkit: predict segmentation Dice scores on unseen datasets."};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--config", g.config, "Run configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed (required when CI is set)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);

  ExtractStatArgs es;
  auto* c_es = app.add_subcommand("extract-stat", "Statistical meta-features per (dataset, subset)");
  c_es->add_option("--manifest", es.manifest)->required();
  c_es->add_option("--descriptors", es.descriptors, "Directory of <dataset_id>.task files")->required();

  PostprocessArgs pd;
  auto* c_pd = app.add_subcommand("postprocess-deep", "Binarize and select deep feature tensors");
  c_pd->add_option("--tensors", pd.tensors, "Directory searched for *.mlten")->required();
  c_pd->add_option("--manifest", pd.manifest)->required();
  c_pd->add_option("--descriptors", pd.descriptors)->required();
  c_pd->add_option("--models", pd.models, "Apply saved binarizer.mlbin/selector.mlsel instead of fitting");
  c_pd->add_option("--train-ids", pd.train_ids, "Comma-separated datasets to fit on (default: all)");

  CrossvalArgs cv;
  auto* c_cv = app.add_subcommand("crossval", "Cross-validate a meta-learner and write the report");
  c_cv->add_option("--features", cv.features, "Feature CSV");
  c_cv->add_option("--tensors", cv.tensors, "Tensor directory; post-processing is refitted per fold");
  c_cv->add_option("--descriptors", cv.descriptors);
  c_cv->add_option("--scores", cv.scores)->required();
  c_cv->add_option("--learner", cv.learner, "svr, mlp or mean");

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train a regressor bank");
  c_tr->add_option("--features", tr.features)->required();
  c_tr->add_option("--scores", tr.scores)->required();
  c_tr->add_option("--learner", tr.learner, "svr, mlp or mean");
  c_tr->add_option("--train-ids", tr.train_ids, "Comma-separated datasets (default: all)");

  PredictArgs pr;
  auto* c_pr = app.add_subcommand("predict", "Predict Dice scores for one dataset");
  c_pr->add_option("--bank", pr.bank)->required();
  c_pr->add_option("--features", pr.features)->required();

  ReportArgs rp;
  auto* c_rp = app.add_subcommand("report", "Rebuild report tables from predictions.csv");
  c_rp->add_option("--predictions", rp.predictions)->required();
  c_rp->add_option("--learner", rp.learner, "Label shown in report.txt");

  FixtureArgs fx;
  auto* c_fx = app.add_subcommand("make-fixture", "Write a synthetic benchmark suite");
  c_fx->add_option("--datasets", fx.suite.n_datasets)->check(CLI::Range(2, 1000));
  c_fx->add_option("--volumes", fx.suite.volumes_per_dataset)->check(CLI::PositiveNumber);
  c_fx->add_option("--methods", fx.suite.n_methods)->check(CLI::Range(2, 1000));
  c_fx->add_option("--width", fx.suite.dims.x)->check(CLI::PositiveNumber);
  c_fx->add_option("--height", fx.suite.dims.y)->check(CLI::PositiveNumber);
  c_fx->add_option("--slices", fx.suite.dims.z)->check(CLI::PositiveNumber);
  c_fx->add_option("--tensor-channels", fx.channels, "Also write tensors with this many channels");
  c_fx->add_option("--tensor-subsets", fx.subsets)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*c_es) extract_stat(g, es);
    if (*c_pd) postprocess_deep(g, pd);
    if (*c_cv) crossval(g, cv);
    if (*c_tr) train(g, tr);
    if (*c_pr) predict(g, pr);
    if (*c_rp) report(g, rp);
    if (*c_fx) make_fixture(g, fx);
  } catch (const std::exception& e) {
    std::cerr << "metaseg: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace metaseg::cli
