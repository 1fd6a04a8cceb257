#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "propdetect/model.hpp"
#include "propdetect/svm.hpp"

using namespace propdetect;

namespace {

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m;
  for (const auto& r : rows) m.append_row(r);
  return m;
}

double accuracy(const std::vector<int>& y, const std::vector<int>& p) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < y.size(); ++i) ok += y[i] == p[i];
  return double(ok) / double(y.size());
}

// Two Gaussian blobs far apart, labels 0 and 1.
void blobs(std::size_t n, std::uint64_t seed, Matrix& x, std::vector<int>& y) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  x = Matrix();
  y.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    const double centre = c == 0 ? -2.0 : 2.0;
    const double row[] = {centre + noise(rng), centre + noise(rng)};
    x.append_row(row);
    y.push_back(c);
  }
}

// Independent check of the dual optimality conditions, straight from the definition.
double dual_violation(const Matrix& x, const std::vector<int>& y, double C,
                      const std::vector<double>& alpha, double gamma) {
  const std::size_t n = y.size();
  std::vector<double> grad(n, -1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double d = 0;
      for (std::size_t k = 0; k < x.cols(); ++k) d += (x(i, k) - x(j, k)) * (x(i, k) - x(j, k));
      grad[i] += y[i] * y[j] * std::exp(-gamma * d) * alpha[j];
    }
  }
  double up = -1e300, low = 1e300;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = -y[i] * grad[i];
    const bool in_up = (y[i] == 1 && alpha[i] < C) || (y[i] == -1 && alpha[i] > 0);
    const bool in_low = (y[i] == 1 && alpha[i] > 0) || (y[i] == -1 && alpha[i] < C);
    if (in_up) up = std::max(up, v);
    if (in_low) low = std::min(low, v);
  }
  return up - low;
}

// Rows labelled by a noisy rule on the sentiment block; other groups carry noise and the doc
// column holds a constant.
FeatureTable synthetic_table(std::size_t n, std::uint64_t seed, Split split,
                             bool multiclass = false) {
  const FeatureGroup groups[] = {FeatureGroup::Rp, FeatureGroup::Sim, FeatureGroup::Sent,
                                 FeatureGroup::Doc};
  FeatureTable t;
  t.schema = FeatureSchema::make(groups);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(t.schema.size());
    for (auto& v : row) v = g(rng);
    row[6] = 0.5;
    TechniqueLabel label = TechniqueLabel::NonPropaganda;
    if (row[2] + 0.5 * row[5] + 0.2 * g(rng) > 0.3) {
      label = multiclass && row[3] > 0 ? TechniqueLabel::Doubt : TechniqueLabel::LoadedLanguage;
    }
    t.values.append_row(row);
    t.keys.push_back({std::to_string(i / 10), static_cast<int>(i % 10) + 1, 10, label, split});
  }
  return t;
}

}  // namespace

TEST_CASE("rbf kernel") {
  const std::vector<double> a{0, 0}, b{1, 2};
  CHECK(rbf_kernel(a, b, 0.5) == doctest::Approx(std::exp(-2.5)));
  CHECK(rbf_kernel(b, b, 3.0) == 1.0);
  const std::vector<double> c{1};
  CHECK_THROWS_AS(rbf_kernel(a, c, 1.0), ValidationError);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Matrix x(50, 8);
  for (std::size_t r = 0; r < 50; ++r) {
    for (std::size_t k = 0; k < 8; ++k) x(r, k) = g(rng) * double(k + 1);
  }
  const auto z = Standardizer::fit(x).transform(x);
  for (double gamma : {1e-4, 1e-3, 0.1, 1.0}) {
    const auto k = rbf_kernel_matrix(z, gamma);
    Eigen::MatrixXd e(50, 50);
    for (int i = 0; i < 50; ++i) {
      for (int j = 0; j < 50; ++j) e(i, j) = k(i, j);
    }
    CHECK((e - e.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < 50; ++i) CHECK(e(i, i) == 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e);
    CHECK(es.eigenvalues().minCoeff() >= -1e-6);
  }
}

TEST_CASE("smo satisfies the dual conditions") {
  Matrix x;
  std::vector<int> y01;
  blobs(40, 3, x, y01);
  // Add overlap so some alphas hit the bound.
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.5);
  for (int i = 0; i < 20; ++i) {
    const double row[] = {g(rng), g(rng)};
    x.append_row(row);
    y01.push_back(i % 2);
  }
  std::vector<int> y;
  for (int v : y01) y.push_back(v == 1 ? 1 : -1);
  for (double C : {0.5, 10.0}) {
    const std::vector<double> c(y.size(), C);
    const auto res = solve_smo(x, y, c, 0.5);
    CHECK(res.converged);
    CHECK(res.kkt_gap <= 1e-3);
    CHECK(dual_violation(x, y, C, res.alpha, 0.5) <= 1e-3 + 1e-9);
    double balance = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      CHECK(res.alpha[i] >= 0.0);
      CHECK(res.alpha[i] <= C);
      balance += y[i] * res.alpha[i];
    }
    CHECK(std::fabs(balance) < 1e-9);
    CHECK(kkt_gap(x, y, c, res.alpha, 0.5) == doctest::Approx(res.kkt_gap).epsilon(1e-6));
  }
  const std::vector<double> c(y.size(), 1.0);
  std::vector<int> bad = y;
  bad[0] = 0;
  CHECK_THROWS_AS(solve_smo(x, bad, c, 1.0), ValidationError);
  std::vector<int> one_class(y.size(), 1);
  CHECK_THROWS_AS(solve_smo(x, one_class, c, 1.0), ValidationError);
}

TEST_CASE("training accuracy on separable fixtures") {
  Matrix x;
  std::vector<int> y;
  blobs(20, 17, x, y);
  const auto m = train_svm(x, y, 1.0, 100.0);
  CHECK(m.mode == TaskMode::Binary);
  CHECK(accuracy(y, predicted_labels(predict(m, x))) == 1.0);

  const auto xor_x = from_rows({{0, 0}, {1, 1}, {0, 1}, {1, 0}});
  const std::vector<int> xor_y{0, 0, 1, 1};
  // RBF kernel matrix of four distinct points is full rank, so they can be shattered.
  const auto k = rbf_kernel_matrix(xor_x, 1.0);
  Eigen::Matrix4d e;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) e(i, j) = k(i, j);
  }
  CHECK(Eigen::FullPivLU<Eigen::Matrix4d>(e).rank() == 4);
  const auto xm = train_svm(xor_x, xor_y, 1.0, 100.0);
  CHECK(accuracy(xor_y, predicted_labels(predict(xm, xor_x))) == 1.0);

  const auto dup = from_rows({{1, 1}, {1, 1}, {0, 0}, {5, 5}});
  const std::vector<int> dup_y{0, 1, 0, 1};
  const auto dm = train_svm(dup, dup_y, 1.0, 10.0);
  CHECK(accuracy(dup_y, predicted_labels(predict(dm, dup))) < 1.0);
}

TEST_CASE("training input validation") {
  Matrix x;
  std::vector<int> y;
  blobs(10, 1, x, y);
  const std::vector<int> single(10, 0);
  CHECK_THROWS_AS(train_svm(x, single, 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(train_svm(x, y, 0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(train_svm(x, y, 1.0, -1.0), ValidationError);
  auto bad = x;
  bad(3, 1) = std::nan("");
  CHECK_THROWS_AS(train_svm(bad, y, 1.0, 1.0), ValidationError);
  const std::vector<int> short_y{0, 1};
  CHECK_THROWS_AS(train_svm(x, short_y, 1.0, 1.0), ValidationError);
}

TEST_CASE("prediction shape and checks") {
  Matrix x;
  std::vector<int> y;
  blobs(20, 2, x, y);
  const auto m = train_svm(x, y, 1.0, 10.0);
  const auto one = predict(m, from_rows({{2, 2}}));
  REQUIRE(one.size() == 1);
  CHECK(one[0].label == 1);
  REQUIRE(one[0].scores.size() == 2);
  CHECK(one[0].scores[0] == -one[0].scores[1]);
  CHECK_THROWS_AS(predict(m, Matrix(2, 3)), ValidationError);

  const auto table = synthetic_table(60, 4, Split::Train);
  const auto fm = fit_model(table, TaskMode::Binary, 0.1, 10.0);
  CHECK(predict(fm, table).size() == 60);
  auto other = table;
  other.schema = FeatureSchema::interpretable();
  CHECK_THROWS_AS(predict(fm, other), ValidationError);
}

TEST_CASE("multiclass one-vs-rest") {
  // Three blobs; class ids 0, 4, 9 to make sure ids are not assumed contiguous.
  std::mt19937_64 rng(21);
  std::normal_distribution<double> noise(0.0, 0.2);
  Matrix x;
  std::vector<int> y;
  const double centres[3][2] = {{0, 3}, {3, 0}, {-3, -3}};
  const int ids[3] = {9, 0, 4};
  for (int i = 0; i < 45; ++i) {
    const double row[] = {centres[i % 3][0] + noise(rng), centres[i % 3][1] + noise(rng)};
    x.append_row(row);
    y.push_back(ids[i % 3]);
  }
  const auto m = train_svm(x, y, 0.5, 10.0);
  CHECK(m.mode == TaskMode::Multiclass);
  CHECK(m.classes == std::vector<int>{0, 4, 9});
  CHECK(m.machines.size() == 3);
  const auto preds = predict(m, x);
  CHECK(accuracy(y, predicted_labels(preds)) == 1.0);
  for (const auto& p : preds) {
    REQUIRE(p.scores.size() == 3);
    const auto best = std::max_element(p.scores.begin(), p.scores.end()) - p.scores.begin();
    CHECK(p.label == m.classes[best]);
  }
}

TEST_CASE("binary conversion") {
  const TechniqueLabel some[] = {TechniqueLabel::NonPropaganda, TechniqueLabel::Doubt};
  CHECK(to_binary(some) == std::vector<int>{0, 1});
  const std::vector<TechniqueLabel> none(5, TechniqueLabel::NonPropaganda);
  CHECK(to_binary(none) == std::vector<int>(5, 0));
  const auto techs = all_techniques();
  CHECK(to_binary(techs) == std::vector<int>(18, 1));
  CHECK(task_targets(some, TaskMode::Multiclass) ==
        std::vector<int>{label_index(some[0]), label_index(some[1])});
  CHECK(parse_mode("binary") == TaskMode::Binary);
  CHECK(parse_mode(to_string(TaskMode::Multiclass)) == TaskMode::Multiclass);
  CHECK_THROWS_AS(parse_mode("ternary"), ValidationError);
}

TEST_CASE("determinism and serialisation") {
  const auto table = synthetic_table(80, 5, Split::Train, true);
  const auto a = fit_model(table, TaskMode::Multiclass, 0.1, 10.0, {}, 13);
  const auto b = fit_model(table, TaskMode::Multiclass, 0.1, 10.0, {}, 13);
  CHECK(a.to_json() == b.to_json());
  const auto pa = predict(a, table);
  const auto back = TrainedModel::from_json(a.to_json());
  CHECK(back.to_json() == a.to_json());
  const auto pb = predict(back, table);
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].label == pb[i].label);
    CHECK(pa[i].scores == pb[i].scores);
  }
  CHECK(back.schema == a.schema);
  CHECK(back.seed == 13);
  CHECK_THROWS_AS(TrainedModel::from_json("{\"version\": 99}"), ValidationError);
  CHECK_THROWS_AS(TrainedModel::from_json("not json"), ValidationError);

  // Binarised multiclass output is a valid binary prediction.
  std::vector<TechniqueLabel> labels;
  for (int id : predicted_labels(pa)) labels.push_back(label_from_index(id));
  for (int v : to_binary(labels)) CHECK((v == 0 || v == 1));
}

TEST_CASE("grid search") {
  const auto train = synthetic_table(120, 31, Split::Train);
  const auto dev = synthetic_table(60, 32, Split::Dev);

  ExperimentConfig single;
  single.grid.gammas = {0.05};
  single.grid.Cs = {3.0};
  const auto s = grid_search(train, dev, single);
  CHECK(s.gamma == 0.05);
  CHECK(s.C == 3.0);
  CHECK(s.table.size() == 1);

  ExperimentConfig cfg;
  cfg.grid.gammas = {1.0, 1e-3, 0.1};
  cfg.grid.Cs = {100.0, 0.1, 1.0};
  cfg.workers = 3;
  const auto r = grid_search(train, dev, cfg);
  REQUIRE(r.table.size() == 9);
  for (std::size_t i = 1; i < r.table.size(); ++i) {
    const auto& p = r.table[i - 1];
    const auto& q = r.table[i];
    CHECK((p.C < q.C || (p.C == q.C && p.gamma < q.gamma)));
  }
  // Brute force over the returned table with the same tie rule.
  GridPoint best = r.table.front();
  for (const auto& p : r.table) {
    if (p.dev.f1 > best.dev.f1) best = p;
  }
  CHECK(r.gamma == best.gamma);
  CHECK(r.C == best.C);
  CHECK(r.model.gamma == r.gamma);
  CHECK(r.model.C == r.C);

  // The dev score of the chosen model matches its table entry.
  const auto pred = predicted_labels(predict(r.model, dev));
  const auto score = task_scores(to_binary(dev.labels()), pred, TaskMode::Binary);
  CHECK(score.f1 == doctest::Approx(best.dev.f1));

  // Serial and parallel runs agree.
  auto serial = cfg;
  serial.workers = 1;
  const auto r1 = grid_search(train, dev, serial);
  for (std::size_t i = 0; i < r.table.size(); ++i) CHECK(r1.table[i].dev.f1 == r.table[i].dev.f1);

  // Column rescaling before standardisation leaves the choice alone.
  auto tr2 = train;
  auto dv2 = dev;
  for (std::size_t i = 0; i < tr2.rows(); ++i) tr2.values(i, 2) *= 1000.0;
  for (std::size_t i = 0; i < dv2.rows(); ++i) dv2.values(i, 2) *= 1000.0;
  const auto r2 = grid_search(tr2, dv2, serial);
  CHECK(r2.gamma == r.gamma);
  CHECK(r2.C == r.C);

  ExperimentConfig empty;
  empty.grid.gammas.clear();
  CHECK_THROWS_AS(grid_search(train, dev, empty), ValidationError);

  const auto g = Grid::from_json(R"({"gamma": [0.5], "C": [1, 2]})");
  CHECK(g.gammas == std::vector<double>{0.5});
  CHECK(g.Cs == std::vector<double>{1, 2});
  CHECK_THROWS_AS(Grid::from_json(R"({"gamma": [], "C": [1]})"), ValidationError);
  CHECK_THROWS_AS(Grid::from_json(R"({"gamma": [-1], "C": [1]})"), ValidationError);
}

TEST_CASE("best threshold") {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const std::vector<int> y{0, 0, 1, 1};
  CHECK(best_threshold(s, y) == 0.35);
  // Every threshold gives the same F1 when all rows are positive: smallest wins.
  const std::vector<int> all{1, 1, 1, 1};
  CHECK(best_threshold(s, all) == 0.1);
  CHECK_THROWS_AS(best_threshold(s, std::vector<int>{1}), ValidationError);
}

TEST_CASE("ablation") {
  const auto train = synthetic_table(120, 41, Split::Train);
  const auto dev = synthetic_table(60, 42, Split::Dev);
  const auto test = synthetic_table(60, 43, Split::Test);
  ExperimentConfig cfg;
  cfg.grid.gammas = {0.1, 0.01};
  cfg.grid.Cs = {1.0, 10.0};
  cfg.workers = 2;

  const auto base = run_ablation(train, dev, test, cfg, {});
  REQUIRE(base.size() == 1);
  CHECK(base[0].dropped == "none");
  const auto gs = grid_search(train, dev, cfg);
  const auto pred = predicted_labels(predict(gs.model, test));
  const auto direct = task_scores(to_binary(test.labels()), pred, TaskMode::Binary);
  CHECK(base[0].f1 == direct.f1);
  CHECK(base[0].precision == direct.precision);
  CHECK(base[0].gamma == gs.gamma);

  const FeatureGroup drops[] = {FeatureGroup::Doc, FeatureGroup::Sent, FeatureGroup::Rp};
  const auto rows = run_ablation(train, dev, test, cfg, drops);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].f1 == base[0].f1);
  CHECK(rows[1].dropped == "doc");
  CHECK(std::fabs(rows[1].f1 - rows[0].f1) * 100 <= 0.5);
  CHECK(rows[2].dropped == "sent");
  REQUIRE(rows[2].doc_threshold);
  CHECK(*rows[2].doc_threshold == 0.5);
  CHECK_FALSE(rows[3].doc_threshold);

  auto retrain = cfg;
  retrain.sent_doc_rule = false;
  const FeatureGroup sent[] = {FeatureGroup::Sent};
  const auto rr = run_ablation(train, dev, test, retrain, sent);
  CHECK_FALSE(rr[1].doc_threshold);
  CHECK(rr[1].f1 < rr[0].f1);

  const FeatureGroup missing[] = {FeatureGroup::Dp};
  CHECK_THROWS_AS(run_ablation(train, dev, test, cfg, missing), ValidationError);
}
