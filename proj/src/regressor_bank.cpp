#include "metaseg/regressor_bank.hpp"

#include <algorithm>
#include <fstream>

#include "metaseg/binary_io.hpp"
#include "metaseg/errors.hpp"
#include "metaseg/parallel.hpp"
#include "metaseg/rng.hpp"

namespace metaseg::metalearn {

namespace {

void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) binary_io::put_f64(out, m(r, c));
}

Eigen::MatrixXd get_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = binary_io::get_f64(in, what);
  return m;
}

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) binary_io::put_f64(out, v(i));
}

Eigen::VectorXd get_vector(std::istream& in, Eigen::Index n, const std::string& what) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = binary_io::get_f64(in, what);
  return v;
}

}  // namespace

LearnerKind parse_learner_kind(const std::string& name) {
  if (name == "svr") return LearnerKind::kSvr;
  if (name == "mlp") return LearnerKind::kMlp;
  if (name == "mean") return LearnerKind::kMean;
  throw ConfigError("unknown learner kind '" + name + "' (expected svr, mlp or mean)");
}

std::string learner_name(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::kSvr: return "svr";
    case LearnerKind::kMlp: return "mlp";
    case LearnerKind::kMean: return "mean";
  }
  return "?";
}

RegressorBank train_bank(const FeatureSet& features, const ScoreMatrix& scores, LearnerKind kind,
                         std::uint64_t seed, const BankConfig& config) {
  if (features.empty()) throw EmptyDataError("train_bank: no training datasets");
  if (scores.n_methods() == 0) throw EmptyDataError("train_bank: no methods");

  std::size_t rows = 0;
  std::size_t width = 0;
  std::vector<std::string> training_ids;
  for (const auto& [id, vectors] : features) {
    if (vectors.empty()) throw EmptyDataError("train_bank: dataset '" + id + "' has no subset vectors");
    if (!scores.has_dataset(id)) {
      throw MissingLabelError("train_bank: missing score for (" + id + ", " + scores.method_ids().front() + ")");
    }
    for (const auto& v : vectors) {
      if (width == 0) width = v.size();
      if (v.size() != width || width == 0) throw ShapeError("train_bank: feature vectors differ in length");
    }
    rows += vectors.size();
    training_ids.push_back(id);
  }

  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  std::vector<std::size_t> row_dataset;
  row_dataset.reserve(rows);
  Eigen::Index r = 0;
  for (const auto& [id, vectors] : features) {
    const std::size_t d = scores.dataset_index(id);
    for (const auto& v : vectors) {
      x.row(r++) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(width));
      row_dataset.push_back(d);
    }
  }

  RegressorBank bank;
  bank.kind = kind;
  bank.method_ids = scores.method_ids();
  bank.standardizer = fit_standardizer(x);
  const Eigen::MatrixXd xs = bank.standardizer.transform(x);
  const auto baseline = training_means(scores, training_ids);

  bank.models.resize(scores.n_methods());
  parallel_for(scores.n_methods(), config.jobs, [&](std::size_t j) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows));
    for (std::size_t k = 0; k < rows; ++k) y(static_cast<Eigen::Index>(k)) = scores.at(row_dataset[k], j);
    switch (kind) {
      case LearnerKind::kSvr:
        bank.models[j] = svr_fit(xs, y, config.svr);
        break;
      case LearnerKind::kMlp: {
        MlpConfig mc = config.mlp;
        mc.seed = derive_seed(seed, scores.method_ids()[j]);
        bank.models[j] = mlp_fit(xs, y, mc);
        break;
      }
      case LearnerKind::kMean:
        bank.models[j] = MeanModel{baseline[j]};
        break;
    }
  });
  return bank;
}

double predict_one(const RegressorBank& bank, std::size_t method, const Eigen::VectorXd& standardized) {
  const auto& model = bank.models.at(method);
  if (const auto* svr = std::get_if<SvrModel>(&model)) return svr_predict(*svr, standardized);
  if (const auto* mlp = std::get_if<MlpModel>(&model)) return std::clamp(mlp_predict(*mlp, standardized), 0.0, 1.0);
  return std::clamp(std::get<MeanModel>(model).value, 0.0, 1.0);
}

std::vector<double> predict_dataset(const RegressorBank& bank, const std::vector<std::vector<double>>& vectors) {
  if (vectors.empty()) throw EmptyDataError("predict_dataset: no subset vectors");
  std::vector<Eigen::VectorXd> standardized;
  standardized.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (static_cast<Eigen::Index>(v.size()) != bank.inputs()) {
      throw ShapeError("predict_dataset: vector has " + std::to_string(v.size()) + " features, bank expects " +
                       std::to_string(bank.inputs()));
    }
    standardized.push_back(
        bank.standardizer.transform(Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), bank.inputs()))));
  }
  std::vector<double> out(bank.method_ids.size(), 0.0);
  for (std::size_t j = 0; j < out.size(); ++j) {
    double sum = 0.0;
    for (const auto& s : standardized) sum += predict_one(bank, j, s);
    out[j] = std::clamp(sum / static_cast<double>(standardized.size()), 0.0, 1.0);
  }
  return out;
}

void save_bank(const RegressorBank& bank, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write model bank " + path.string());
  out << "MLBANK 1\n"
      << "kind: " << learner_name(bank.kind) << '\n'
      << "inputs: " << bank.inputs() << '\n'
      << "methods: " << bank.method_ids.size() << '\n';
  for (const auto& id : bank.method_ids) {
    if (id.empty() || id.find('\n') != std::string::npos) throw DataError("method id not storable: '" + id + "'");
    out << "method: " << id << '\n';
  }
  out << '\n';
  put_vector(out, bank.standardizer.means);
  put_vector(out, bank.standardizer.stds);
  for (const auto& model : bank.models) {
    if (const auto* svr = std::get_if<SvrModel>(&model)) {
      binary_io::put_u64(out, static_cast<std::uint64_t>(svr->dual_coef.size()));
      binary_io::put_f64(out, svr->gamma);
      binary_io::put_f64(out, svr->C);
      binary_io::put_f64(out, svr->epsilon);
      binary_io::put_f64(out, svr->bias);
      put_vector(out, svr->dual_coef);
      put_matrix(out, svr->support_x);
    } else if (const auto* mlp = std::get_if<MlpModel>(&model)) {
      binary_io::put_f64(out, mlp->dropout_rate);
      put_matrix(out, mlp->w1);
      put_vector(out, mlp->b1);
      put_matrix(out, mlp->w2);
      put_vector(out, mlp->b2);
      put_matrix(out, mlp->w3);
      put_vector(out, mlp->b3);
    } else {
      binary_io::put_f64(out, std::get<MeanModel>(model).value);
    }
  }
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

RegressorBank load_bank(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model bank " + path.string());
  const std::string name = path.string();
  binary_io::expect_line(in, 1, "MLBANK 1", name);
  RegressorBank bank;
  bank.kind = parse_learner_kind(binary_io::expect_field(in, 2, "kind", name));
  const auto q = static_cast<Eigen::Index>(
      binary_io::parse_size(binary_io::expect_field(in, 3, "inputs", name), 3, name));
  const std::size_t m = binary_io::parse_size(binary_io::expect_field(in, 4, "methods", name), 4, name);
  if (q < 1 || m < 1) throw FormatError(name + ": bank needs at least one input and one method");
  for (std::size_t j = 0; j < m; ++j) {
    bank.method_ids.push_back(binary_io::expect_field(in, static_cast<int>(5 + j), "method", name));
  }
  binary_io::expect_line(in, static_cast<int>(5 + m), "", name);
  bank.standardizer.means = get_vector(in, q, name);
  bank.standardizer.stds = get_vector(in, q, name);
  for (std::size_t j = 0; j < m; ++j) {
    switch (bank.kind) {
      case LearnerKind::kSvr: {
        SvrModel s;
        const auto n_sv = static_cast<Eigen::Index>(binary_io::get_u64(in, name));
        s.n_features = q;
        s.gamma = binary_io::get_f64(in, name);
        s.C = binary_io::get_f64(in, name);
        s.epsilon = binary_io::get_f64(in, name);
        s.bias = binary_io::get_f64(in, name);
        s.dual_coef = get_vector(in, n_sv, name);
        s.support_x = get_matrix(in, n_sv, q, name);
        bank.models.emplace_back(std::move(s));
        break;
      }
      case LearnerKind::kMlp: {
        MlpModel p;
        p.dropout_rate = binary_io::get_f64(in, name);
        p.w1 = get_matrix(in, kHidden1, q, name);
        p.b1 = get_vector(in, kHidden1, name);
        p.w2 = get_matrix(in, kHidden2, kHidden1, name);
        p.b2 = get_vector(in, kHidden2, name);
        p.w3 = get_matrix(in, 1, kHidden2, name);
        p.b3 = get_vector(in, 1, name);
        bank.models.emplace_back(std::move(p));
        break;
      }
      case LearnerKind::kMean:
        bank.models.emplace_back(MeanModel{binary_io::get_f64(in, name)});
        break;
    }
  }
  if (!binary_io::at_end(in)) throw FormatError(name + ": trailing bytes after model payloads");
  return bank;
}

}  // namespace metaseg::metalearn
