#include <doctest.h>

#include <cmath>

#include "metaseg/errors.hpp"
#include "metaseg/regressor_bank.hpp"
#include "metaseg/rng.hpp"
#include "support/fixtures.hpp"

using namespace metaseg;
using namespace metaseg::metalearn;

namespace {

Eigen::VectorXd vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

BankConfig quick() {
  BankConfig c;
  c.mlp.epochs = 15;
  return c;
}

}  // namespace

TEST_CASE("standardizer examples") {
  Eigen::MatrixXd one(1, 3);
  one << 1, 2, 3;
  const auto s = fit_standardizer(one);
  CHECK(s.means == one.row(0).transpose());
  CHECK(s.stds == Eigen::VectorXd::Ones(3));
  CHECK(s.transform(one).isZero());

  Eigen::MatrixXd col(2, 2);
  col << -1, 7, 1, 7;
  const auto t = fit_standardizer(col);
  CHECK(t.means(0) == 0.0);
  CHECK(t.stds(0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(t.means(1) == 7.0);
  CHECK(t.stds(1) == 1.0);
  CHECK(t.transform(col).col(1).isZero());
  CHECK_THROWS_AS(fit_standardizer(Eigen::MatrixXd(0, 2)), EmptyDataError);
  CHECK_THROWS_AS(t.transform(Eigen::VectorXd(Eigen::VectorXd::Zero(3))), ShapeError);
}

TEST_CASE("learner kinds parse") {
  CHECK(parse_learner_kind("svr") == LearnerKind::kSvr);
  CHECK(learner_name(parse_learner_kind("mlp")) == "mlp");
  CHECK(learner_name(LearnerKind::kMean) == "mean");
  CHECK_THROWS_AS(parse_learner_kind("knn"), ConfigError);
}

TEST_CASE("one model per method") {
  Rng rng(1);
  const auto f = fixture::random_features(rng, 6, 4, 5);
  const auto s = fixture::random_scores(rng, 6, 19);
  const auto bank = train_bank(f, s, LearnerKind::kSvr, 3);
  CHECK(bank.models.size() == 19);
  CHECK(bank.method_ids == s.method_ids());
  CHECK(bank.inputs() == 5);
  for (const auto& v : f.at("ds00")) {
    const auto p = predict_dataset(bank, {v});
    for (double x : p) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
  }
}

TEST_CASE("constant scores give a constant svr bank") {
  Rng rng(2);
  const auto f = fixture::random_features(rng, 4, 3, 3);
  const ScoreMatrix s({"ds00", "ds01", "ds02", "ds03"}, {"m"}, {0.5, 0.5, 0.5, 0.5});
  const auto bank = train_bank(f, s, LearnerKind::kSvr, 0);
  for (int k = 0; k < 5; ++k) {
    const std::vector<double> probe{rng.normal() * 3, rng.normal(), rng.normal()};
    CHECK(predict_dataset(bank, {probe})[0] == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("identical score columns give identical svr predictions") {
  Rng rng(3);
  const auto f = fixture::random_features(rng, 5, 3, 4);
  std::vector<double> cells;
  for (int d = 0; d < 5; ++d) {
    const double v = rng.uniform(0.1, 0.9);
    cells.push_back(v);
    cells.push_back(v);
  }
  const ScoreMatrix s({"ds00", "ds01", "ds02", "ds03", "ds04"}, {"a", "b"}, cells);
  const auto bank = train_bank(f, s, LearnerKind::kSvr, 0);
  for (int k = 0; k < 5; ++k) {
    const std::vector<double> probe{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    const auto p = predict_dataset(bank, {probe});
    CHECK(p[0] == p[1]);
  }
}

TEST_CASE("missing score rows are reported") {
  Rng rng(4);
  const auto f = fixture::random_features(rng, 3, 2, 2);
  const ScoreMatrix s({"ds00", "ds01"}, {"m"}, {0.5, 0.4});
  try {
    train_bank(f, s, LearnerKind::kSvr, 0);
    FAIL("expected MissingLabelError");
  } catch (const MissingLabelError& e) {
    CHECK(std::string(e.what()).find("ds02") != std::string::npos);
  }
}

TEST_CASE("mean learner predicts training means") {
  Rng rng(5);
  const auto f = fixture::random_features(rng, 3, 2, 2);
  const auto s = fixture::random_scores(rng, 3, 4);
  const auto bank = train_bank(f, s, LearnerKind::kMean, 0);
  const auto want = training_means(s, {"ds00", "ds01", "ds02"});
  const auto got = predict_dataset(bank, f.at("ds01"));
  for (std::size_t j = 0; j < 4; ++j) CHECK(got[j] == want[j]);
}

TEST_CASE("predict_dataset averages per-subset predictions") {
  Rng rng(6);
  const auto f = fixture::random_features(rng, 5, 6, 3);
  const auto s = fixture::random_scores(rng, 5, 3);
  const auto bank = train_bank(f, s, LearnerKind::kSvr, 0);

  const std::vector<double> single{0.1, -0.4, 0.8};
  const auto one = predict_dataset(bank, {single});
  for (std::size_t j = 0; j < 3; ++j) CHECK(one[j] == predict_one(bank, j, bank.standardizer.transform(vec(single))));

  std::vector<std::vector<double>> many;
  for (int k = 0; k < 100; ++k) many.push_back({rng.normal(), rng.normal(), rng.normal()});
  const auto mean = predict_dataset(bank, many);
  for (std::size_t j = 0; j < 3; ++j) {
    double hand = 0.0;
    for (const auto& v : many) hand += predict_one(bank, j, bank.standardizer.transform(vec(v)));
    CHECK(std::abs(mean[j] - hand / 100.0) <= 1e-9);
  }
  CHECK_THROWS_AS(predict_dataset(bank, {}), EmptyDataError);
  CHECK_THROWS_AS(predict_dataset(bank, {{1.0}}), ShapeError);
}

TEST_CASE("bank archives reproduce predictions bitwise") {
  fixture::TempDir dir;
  Rng rng(7);
  const auto f = fixture::random_features(rng, 5, 4, 6);
  const auto s = fixture::random_scores(rng, 5, 3);
  for (auto kind : {LearnerKind::kSvr, LearnerKind::kMlp, LearnerKind::kMean}) {
    const auto bank = train_bank(f, s, kind, 11, quick());
    const auto path = dir / (learner_name(kind) + ".mlbank");
    save_bank(bank, path);
    const auto back = load_bank(path);
    CHECK(back.kind == kind);
    CHECK(back.method_ids == bank.method_ids);
    CHECK(back.standardizer == bank.standardizer);
    for (const auto& [id, vectors] : f) CHECK(predict_dataset(back, vectors) == predict_dataset(bank, vectors));
    save_bank(back, dir / "again.mlbank");
    CHECK(fixture::read_bytes(path) == fixture::read_bytes(dir / "again.mlbank"));
    CHECK(fixture::read_text(path).rfind("MLBANK 1\n", 0) == 0);
  }
  fixture::write_text(dir / "bad.mlbank", "MLBANK 1\nkind: svr\n");
  CHECK_THROWS_AS(load_bank(dir / "bad.mlbank"), FormatError);
}

TEST_CASE("training does not depend on the job count") {
  fixture::TempDir dir;
  Rng rng(8);
  const auto f = fixture::random_features(rng, 5, 4, 4);
  const auto s = fixture::random_scores(rng, 5, 4);
  auto serial = quick();
  auto threaded = quick();
  threaded.jobs = 3;
  for (auto kind : {LearnerKind::kSvr, LearnerKind::kMlp}) {
    save_bank(train_bank(f, s, kind, 9, serial), dir / "a.mlbank");
    save_bank(train_bank(f, s, kind, 9, threaded), dir / "b.mlbank");
    CHECK(fixture::read_bytes(dir / "a.mlbank") == fixture::read_bytes(dir / "b.mlbank"));
  }
}
