#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "propdetect/errors.hpp"
#include "propdetect/eval.hpp"
#include "propdetect/util.hpp"

using namespace propdetect;

namespace {

struct ReportedRow {
  const char* name;
  double p, r, f1;
  std::size_t support;
};

// Per-technique test results reported for the 19-way task, in percent.
const ReportedRow kTable[] = {
    {"Non-propaganda", 94.37, 36.62, 52.77, 2927},
    {"Name Calling", 14.16, 21.92, 17.20, 146},
    {"Repetition", 4.60, 5.59, 5.05, 143},
    {"Slogans", 3.75, 20.69, 6.35, 29},
    {"Appeal to Fear", 12.99, 38.37, 19.41, 86},
    {"Doubt", 5.97, 34.85, 10.20, 66},
    {"Exaggeration", 6.06, 20.90, 9.40, 67},
    {"Flag-Waving", 10.98, 44.62, 17.63, 65},
    {"Loaded Language", 32.80, 20.13, 24.95, 303},
    {"Reductio", 8.00, 22.22, 11.76, 9},
    {"Bandwagon", 0, 0, 0, 3},
    {"Causal Oversimplification", 4.03, 27.27, 7.02, 22},
    {"Obfuscation", 0, 0, 0, 5},
    {"Appeal to Authority", 1.32, 13.04, 2.39, 23},
    {"Black-and-White Fallacy", 0.89, 4.55, 1.49, 22},
    {"Thought-terminating Cliches", 3.67, 44.44, 6.78, 18},
    {"Red Herring", 0, 0, 0, 11},
    {"Straw Men", 0, 0, 0, 1},
    {"Whataboutism", 2.54, 14.29, 4.32, 21},
};

// Splits one CSV line, honouring double quotes.
std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) rows.push_back(csv_fields(line));
  return rows;
}

}  // namespace

TEST_CASE("prf examples") {
  const std::vector<int> y{0, 1, 1, 2, 2, 2};
  const auto perfect = prf(y, y, 2);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);
  CHECK(perfect.support == 3);

  const auto absent = prf(y, y, 7);
  CHECK(absent.precision == 0.0);
  CHECK(absent.recall == 0.0);
  CHECK(absent.f1 == 0.0);
  CHECK(absent.support == 0);

  // cls 1: TP 1, FP 1, FN 1.
  const std::vector<int> p{1, 1, 0, 2, 2, 2};
  const auto m = prf(y, p, 1, "one");
  CHECK(m.name == "one");
  CHECK(m.precision == 0.5);
  CHECK(m.recall == 0.5);
  CHECK(m.f1 == 0.5);

  const std::vector<int> shorter{1};
  CHECK_THROWS_AS(prf(y, shorter, 1), ValidationError);
}

TEST_CASE("f1 from reported precision and recall") {
  CHECK(std::fabs(100 * f1_score(0.3280, 0.2013) - 24.95) <= 0.01);
  CHECK(f1_score(0, 0) == 0.0);
  for (const auto& row : kTable) {
    // Every row of the reported table is internally consistent to rounding.
    CHECK(std::fabs(100 * f1_score(row.p / 100, row.r / 100) - row.f1) <= 0.01);
  }
}

TEST_CASE("weighted average") {
  std::vector<ClassMetrics> one{{"a", 0.2, 0.4, 0.3, 5}};
  const auto w1 = weighted_average(one);
  CHECK(w1.precision == doctest::Approx(0.2));
  CHECK(w1.f1 == doctest::Approx(0.3));
  CHECK(w1.support == 5);

  std::vector<ClassMetrics> two{{"a", 0, 0, 0, 1}, {"b", 1, 1, 1, 3}};
  CHECK(100 * weighted_average(two).f1 == doctest::Approx(75.0));

  std::vector<ClassMetrics> empty{{"a", 1, 1, 1, 0}};
  CHECK_THROWS_AS(weighted_average(empty), ValidationError);

  std::vector<ClassMetrics> reported;
  for (const auto& row : kTable) {
    reported.push_back({row.name, row.p / 100, row.r / 100, row.f1 / 100, row.support});
  }
  const auto w = weighted_average(reported);
  CHECK(w.support == 3967);
  CHECK(std::fabs(100 * w.f1 - 42.88) <= 0.05);
  CHECK(std::fabs(100 * w.precision - 73.59) <= 0.05);
  CHECK(std::fabs(100 * w.recall - 32.80) <= 0.05);

  // Same when every F1 is recomputed from its P and R.
  for (auto& m : reported) m.f1 = f1_score(m.precision, m.recall);
  CHECK(std::fabs(100 * weighted_average(reported).f1 - 42.88) <= 0.05);
}

TEST_CASE("confusion matrix") {
  const std::vector<int> y{0, 1, 2, 2};
  const auto diag = confusion(y, y, 3);
  CHECK(diag == ConfusionMatrix{{1, 0, 0}, {0, 1, 0}, {0, 0, 2}});
  const auto empty = confusion(std::vector<int>{}, std::vector<int>{});
  REQUIRE(empty.size() == kNumLabels);
  for (const auto& row : empty) CHECK(row == std::vector<std::size_t>(kNumLabels, 0));
  const std::vector<int> bad{0, 1};
  CHECK_THROWS_AS(confusion(y, bad, 3), ValidationError);
  const std::vector<int> out_of_range{0, 1, 2, 5};
  CHECK_THROWS_AS(confusion(y, out_of_range, 3), ValidationError);
}

TEST_CASE("multiclass evaluation properties") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> lab(0, kNumLabels - 1);
  std::uniform_real_distribution<double> u;
  std::vector<TechniqueLabel> y, p;
  for (int i = 0; i < 600; ++i) {
    const int t = lab(rng);
    y.push_back(label_from_index(t));
    p.push_back(label_from_index(u(rng) < 0.4 ? t : lab(rng)));
  }
  const auto res = evaluate_multiclass(y, p);
  REQUIRE(res.per_class.size() == kNumLabels);
  std::size_t correct = 0, diag = 0, total = 0;
  for (std::size_t i = 0; i < y.size(); ++i) correct += y[i] == p[i];
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    diag += res.confusion[c][c];
    std::size_t row = 0;
    for (auto v : res.confusion[c]) row += v;
    total += row;
    CHECK(row == res.per_class[c].support);
    CHECK(res.per_class[c].name == display_name(label_from_index(static_cast<int>(c))));
    const auto& m = res.per_class[c];
    if (m.precision > 0 && m.recall > 0) {
      CHECK(m.f1 <= std::max(m.precision, m.recall) + 1e-12);
      CHECK(m.f1 >= std::min(m.precision, m.recall) - 1e-12);
    }
  }
  CHECK(diag == correct);
  CHECK(total == y.size());

  // Relabel classes by a permutation: per-class numbers move with their class.
  std::vector<int> perm(kNumLabels);
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> yi, pi, yp, pp;
  for (std::size_t i = 0; i < y.size(); ++i) {
    yi.push_back(label_index(y[i]));
    pi.push_back(label_index(p[i]));
    yp.push_back(perm[yi.back()]);
    pp.push_back(perm[pi.back()]);
  }
  for (int c = 0; c < static_cast<int>(kNumLabels); ++c) {
    const auto a = prf(yi, pi, c);
    const auto b = prf(yp, pp, perm[c]);
    CHECK(a.f1 == b.f1);
    CHECK(a.support == b.support);
  }

  const auto js = nlohmann::json::parse(res.to_json());
  CHECK(js["per_class"].size() == kNumLabels);
  CHECK(js["confusion"].size() == kNumLabels);
  CHECK(js["weighted"]["f1"].get<double>() == doctest::Approx(res.weighted.f1));
}

TEST_CASE("binary evaluation") {
  const std::vector<int> y{1, 1, 0, 0, 1};
  const std::vector<int> p{1, 0, 1, 0, 1};
  const auto res = evaluate_binary(y, p);
  REQUIRE(res.per_class.size() == 2);
  CHECK(res.weighted.precision == doctest::Approx(2.0 / 3));
  CHECK(res.weighted.recall == doctest::Approx(2.0 / 3));
  CHECK(res.weighted.support == 3);
  CHECK(res.per_class[0].support == 2);
}

TEST_CASE("table rendering") {
  std::vector<ClassMetrics> rows;
  for (const auto& row : kTable) {
    rows.push_back({row.name, row.p / 100, row.r / 100, row.f1 / 100, row.support});
  }
  rows[0].name = "Name Calling, Labeling";
  const auto w = weighted_average(rows);
  const auto csv = render_class_table_csv(rows, w);
  const auto parsed = csv_rows(csv);
  REQUIRE(parsed.size() == 1 + 19 + 1);
  CHECK(parsed[1][0] == "Name Calling, Labeling");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(std::stod(parsed[i + 1][1]) == doctest::Approx(kTable[i].p));
    CHECK(std::stod(parsed[i + 1][3]) == doctest::Approx(kTable[i].f1));
    CHECK(std::stoul(parsed[i + 1][4]) == kTable[i].support);
  }
  CHECK(parsed.back()[0] == "weighted avg");
  CHECK(parsed.back()[3] == "42.88");
  CHECK(csv.find("Straw Men,0.00,0.00,0.00,1") != std::string::npos);

  const auto text = render_class_table_text(rows, w);
  CHECK(text.find("weighted avg") != std::string::npos);
  CHECK(text.find("42.88") != std::string::npos);

  const ScoreRow ablation[] = {{"none", 0.4097, 0.7327, 0.5255}, {"-sent", 0.3053, 0.7769, 0.4383}};
  const auto sc = csv_rows(render_score_table_csv("dropped", ablation));
  REQUIRE(sc.size() == 3);
  CHECK(sc[0] == std::vector<std::string>{"dropped", "P", "R", "F1"});
  CHECK(sc[1][3] == "52.55");
  CHECK(sc[2][1] == "30.53");
  const auto st = render_score_table_text("Ablation", "dropped", ablation);
  CHECK(st.find("43.83") != std::string::npos);
}
