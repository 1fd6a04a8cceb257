#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "propdetect/analysis.hpp"
#include "propdetect/util.hpp"

using namespace propdetect;
namespace fs = std::filesystem;

namespace {

// Textbook population covariance, used as the reference.
double direct_covariance(const std::vector<double>& f, const std::vector<int>& t) {
  const double n = static_cast<double>(f.size());
  double mf = 0, mt = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    mf += f[i];
    mt += t[i];
  }
  mf /= n;
  mt /= n;
  double s = 0;
  for (std::size_t i = 0; i < f.size(); ++i) s += (f[i] - mf) * (t[i] - mt);
  return s / n;
}

std::size_t count_lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

std::size_t count_of(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("mixed covariance examples") {
  const std::vector<double> f{1, 2, 3, 4};
  const std::vector<int> t{0, 0, 1, 1};
  CHECK(mixed_covariance(f, t) == doctest::Approx(0.5).epsilon(1e-12));
  const std::vector<double> flat{3, 3, 3, 3};
  CHECK(mixed_covariance(flat, t) == 0.0);
  const std::vector<int> ones{1, 1, 1, 1}, zeros{0, 0, 0, 0};
  CHECK(mixed_covariance(f, ones) == 0.0);
  CHECK(mixed_covariance(f, zeros) == 0.0);
  const std::vector<int> short_t{0, 1};
  CHECK_THROWS_AS(mixed_covariance(f, short_t), ValidationError);
  const std::vector<int> bad_t{0, 2, 1, 0};
  CHECK_THROWS_AS(mixed_covariance(f, bad_t), ValidationError);
  CHECK_THROWS_AS(mixed_covariance(std::vector<double>{}, std::vector<int>{}), ValidationError);
}

TEST_CASE("mixed covariance equals direct covariance") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> len(2, 500);
  std::normal_distribution<double> n(0.0, 3.0);
  std::uniform_real_distribution<double> u;
  std::uniform_real_distribution<double> scale(-5.0, 5.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = len(rng);
    const double p = u(rng);
    std::vector<double> f(m);
    std::vector<int> t(m);
    for (std::size_t i = 0; i < m; ++i) {
      f[i] = n(rng) + 2.0;
      t[i] = u(rng) < p ? 1 : 0;
    }
    const double got = mixed_covariance(f, t);
    CHECK(std::fabs(got - direct_covariance(f, t)) <= 1e-9);
    const double a = scale(rng);
    std::vector<double> af(f);
    for (auto& v : af) v *= a;
    CHECK(std::fabs(mixed_covariance(af, t) - a * got) <= 1e-9);
  }
}

TEST_CASE("covariance matrix") {
  const FeatureGroup groups[] = {FeatureGroup::Rp, FeatureGroup::Sim};
  const auto schema = FeatureSchema::make(groups);

  // Feature 0 is the indicator of Loaded Language; half of the rows carry it.
  std::vector<TechniqueLabel> labels;
  Matrix m;
  for (int i = 0; i < 40; ++i) {
    const auto l = i % 2 == 0 ? TechniqueLabel::LoadedLanguage
                              : (i % 4 == 1 ? TechniqueLabel::Doubt : TechniqueLabel::Slogans);
    labels.push_back(l);
    const double row[] = {l == TechniqueLabel::LoadedLanguage ? 1.0 : 0.0, double(i % 3)};
    m.append_row(row);
  }
  const auto cm = covariance_matrix(m, schema, labels);
  REQUIRE(cm.values.rows() == 2);
  REQUIRE(cm.values.cols() == kNumTechniques);
  const auto ll = cm.technique_column(TechniqueLabel::LoadedLanguage);
  for (std::size_t j = 0; j < kNumTechniques; ++j) {
    CHECK(cm.values(0, j) >= 0.0);
    CHECK(cm.values(0, j) <= cm.values(0, ll));
    CHECK(cm.passes(0, j) == (cm.values(0, j) >= 0.001));
  }
  CHECK(cm.values(0, ll) == doctest::Approx(0.25));
  CHECK(cm.counts[ll] == 20);
  CHECK(cm.counts[cm.technique_column(TechniqueLabel::Doubt)] == 10);
  CHECK(cm.counts[cm.technique_column(TechniqueLabel::Bandwagon)] == 0);
  CHECK(cm.features == schema.names());

  const auto all = covariance_matrix(m, schema, labels, 0.0);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < kNumTechniques; ++j) CHECK(all.passes(i, j));
  }

  const auto back = CovarianceMatrix::from_json(cm.to_json());
  CHECK(back.features == cm.features);
  CHECK(back.groups == cm.groups);
  CHECK(back.counts == cm.counts);
  CHECK(back.values.data() == cm.values.data());
  CHECK(back.threshold == cm.threshold);
  CHECK_THROWS_AS(CovarianceMatrix::from_json("{\"features\": 3}"), ValidationError);

  labels.pop_back();
  CHECK_THROWS_AS(covariance_matrix(m, schema, labels), ValidationError);
  CHECK_THROWS_AS(covariance_matrix(Matrix(40, 3), schema, labels), ValidationError);
}

TEST_CASE("independent features stay below 0.05") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n;
  std::uniform_int_distribution<std::size_t> lab(0, kNumLabels - 1);
  const FeatureGroup groups[] = {FeatureGroup::Rp};
  const auto schema = FeatureSchema::make(groups);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix m(10000, 1);
    std::vector<TechniqueLabel> labels(10000);
    for (std::size_t i = 0; i < 10000; ++i) {
      m(i, 0) = n(rng);
      labels[i] = label_from_index(lab(rng));
    }
    const auto z = Standardizer::fit(m).transform(m);
    const auto cm = covariance_matrix(z, schema, labels);
    for (std::size_t j = 0; j < kNumTechniques; ++j) CHECK(cm.values(0, j) < 0.05);
  }
}

TEST_CASE("behaviour statistics") {
  auto rec = [](std::string id, int idx, TechniqueLabel l) {
    SentenceRecord r;
    r.article_id = std::move(id);
    r.sentence_index = idx;
    r.n_sentences = 6;
    r.label = l;
    return r;
  };
  const auto P = TechniqueLabel::Doubt;
  const auto N = TechniqueLabel::NonPropaganda;
  std::vector<SentenceRecord> titles{rec("1", 1, P), rec("1", 2, N), rec("2", 1, P)};
  const auto all = behavior_stats(titles);
  CHECK(all.first5 == 1.0);
  CHECK(all.first3 == 1.0);
  CHECK(all.title == 1.0);

  const auto none = behavior_stats({rec("1", 1, N), rec("2", 4, N)});
  CHECK(none.first5 == 0.0);
  CHECK(none.title == 0.0);

  // a: title, b: sentence 3, c: sentence 5, d: sentence 6 only.
  const auto mixed = behavior_stats(
      {rec("a", 1, P), rec("b", 3, P), rec("b", 1, N), rec("c", 5, P), rec("d", 6, P)});
  CHECK(mixed.first5 == doctest::Approx(0.75));
  CHECK(mixed.first3 == doctest::Approx(0.5));
  CHECK(mixed.title == doctest::Approx(0.25));
  CHECK(mixed.title <= mixed.first3);
  CHECK(mixed.first3 <= mixed.first5);
}

TEST_CASE("heatmap export") {
  const FeatureGroup groups[] = {FeatureGroup::Rp, FeatureGroup::Doc};
  const auto schema = FeatureSchema::make(groups);
  Matrix m;
  std::vector<TechniqueLabel> labels;
  for (int i = 0; i < 10; ++i) {
    const double row[] = {double(i), 1.0};
    m.append_row(row);
    labels.push_back(i < 5 ? TechniqueLabel::Doubt : TechniqueLabel::NonPropaganda);
  }
  const auto cm = covariance_matrix(m, schema, labels);
  const auto csv = heatmap_csv(cm);
  CHECK(count_lines(csv) == 3);
  // The constant feature is masked everywhere: its row is all empty cells.
  CHECK(csv.find("\ndoc" + std::string(kNumTechniques, ',') + "\n") != std::string::npos);
  CHECK(csv.find("Doubt (5)") != std::string::npos);

  const auto svg = heatmap_svg(cm);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(count_of(svg, "class=\"cell masked\"") == 2 * kNumTechniques - 1);
  CHECK(count_of(svg, "class=\"cell\"") == 1);

  const fs::path dir = fs::temp_directory_path() / "propdetect_heatmap_test";
  fs::remove_all(dir);
  const auto paths = export_heatmap(cm, dir);
  REQUIRE(paths.size() == 3);
  std::vector<std::string> first;
  for (const auto& p : paths) first.push_back(read_file(p));
  export_heatmap(cm, dir);
  for (std::size_t i = 0; i < paths.size(); ++i) CHECK(read_file(paths[i]) == first[i]);
  CHECK(first[0] == csv);
  fs::remove_all(dir);

  write_file(fs::temp_directory_path() / "propdetect_not_a_dir", "x");
  CHECK_THROWS_AS(export_heatmap(cm, fs::temp_directory_path() / "propdetect_not_a_dir" / "sub"),
                  IoError);
}
