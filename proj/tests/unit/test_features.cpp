#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "propdetect/corpus.hpp"
#include "propdetect/features.hpp"
#include "propdetect/reference_providers.hpp"

using namespace propdetect;

namespace {

const std::string kData = PROPDETECT_TEST_DATA;

struct Fixture {
  std::vector<Article> articles = load_articles(kData + "/corpus/articles");
  std::vector<SentenceRecord> records =
      records_from_jsonl(read_file(kData + "/corpus/expected_records.jsonl"));
};

class FailingStance : public StanceClassifier {
 public:
  StanceDistribution stance(std::string_view sentence, std::string_view) override {
    if (sentence.find("gates") != std::string_view::npos) {
      throw ProviderError("stance backend refused", true);
    }
    return {};
  }
};

}  // namespace

TEST_CASE("feature groups parse") {
  const auto g = parse_groups("sent,rp");
  REQUIRE(g.size() == 2);
  CHECK(g[0] == FeatureGroup::Sent);
  CHECK(parse_group("emb") == FeatureGroup::Emb);
  CHECK_THROWS_AS(parse_groups("rp,rp"), ValidationError);
  CHECK_THROWS_AS(parse_groups(""), ValidationError);
  CHECK_THROWS_AS(parse_group("pos"), ValidationError);
  for (auto grp : kAllGroups) CHECK(parse_group(to_string(grp)) == grp);
}

TEST_CASE("schema layout") {
  const auto s = FeatureSchema::interpretable();
  CHECK(s.size() == 1 + 1 + 10 + 27 + 4 + 1);
  const auto with_emb = FeatureSchema::make(kAllGroups, 64);
  CHECK(with_emb.size() == 44 + 64);
  CHECK(with_emb.embedding_dim() == 64);
  CHECK_THROWS_AS(FeatureSchema::make(kAllGroups, 0), ValidationError);

  // Input order does not matter.
  const FeatureGroup reversed[] = {FeatureGroup::Doc, FeatureGroup::Sent, FeatureGroup::Rp};
  const FeatureGroup sorted[] = {FeatureGroup::Rp, FeatureGroup::Sent, FeatureGroup::Doc};
  CHECK(FeatureSchema::make(reversed) == FeatureSchema::make(sorted));

  const auto names = s.names();
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());
  CHECK(s.range(FeatureGroup::Dp) == std::optional(std::pair<std::size_t, std::size_t>{12, 39}));
  CHECK_FALSE(s.range(FeatureGroup::Emb));
  CHECK(s.index_of("doc") == 43);
  CHECK_FALSE(s.index_of("nope"));

  CHECK(FeatureSchema::from_json(s.to_json()) == s);
  CHECK(FeatureSchema::from_json(s.to_json()).fingerprint() == s.fingerprint());
  CHECK(FeatureSchema::make(sorted).fingerprint() != s.fingerprint());
  CHECK_THROWS_AS(FeatureSchema::from_json("{"), ValidationError);

  auto cols = s.columns();
  std::swap(cols[0], cols[43]);
  CHECK_THROWS_AS(FeatureSchema::from_columns(cols), ValidationError);
  cols = s.columns();
  cols[1].name = cols[0].name;
  CHECK_THROWS_AS(FeatureSchema::from_columns(cols), ValidationError);
}

TEST_CASE("relative position and cosine") {
  CHECK(relative_position(1, 10) == doctest::Approx(0.1));
  CHECK(relative_position(7, 7) == 1.0);
  CHECK_THROWS_AS(relative_position(0, 10), ValidationError);
  CHECK_THROWS_AS(relative_position(11, 10), ValidationError);

  const std::vector<double> x{1, 0}, y{0, 1}, z{0, 0}, w{3, 4};
  CHECK(cosine_similarity(w, w) == doctest::Approx(1.0));
  CHECK(cosine_similarity(x, y) == 0.0);
  CHECK(cosine_similarity(z, w) == 0.0);
  const std::vector<double> three{1, 2, 3};
  CHECK_THROWS_AS(cosine_similarity(x, three), ValidationError);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(9), b(9);
    for (auto& v : a) v = n(rng);
    for (auto& v : b) v = n(rng);
    const double c = cosine_similarity(a, b);
    CHECK(c == cosine_similarity(b, a));
    CHECK(std::fabs(c) <= 1 + 1e-12);
  }
}

TEST_CASE("stance block") {
  const auto pure = stance_features({1, 0, 0, 0});
  CHECK(pure == std::array<double, 10>{0, 1, 0, 0, 0, 0, 1, 0, 0, 0});
  const auto mix = stance_features({0.1, 0.5, 0.1, 0.3});
  CHECK(mix[0] == doctest::Approx(0.9));
  CHECK(std::vector<double>(mix.begin() + 5, mix.end()) == std::vector<double>{1, 0, 1, 0, 0});
  const auto tie = stance_features({0.25, 0.25, 0.25, 0.25});
  CHECK(std::vector<double>(tie.begin() + 5, tie.end()) == std::vector<double>{0, 1, 0, 0, 0});

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u;
  for (int t = 0; t < 200; ++t) {
    double p[4];
    double z = 0;
    for (auto& v : p) z += v = u(rng);
    const auto f = stance_features({p[0] / z, p[1] / z, p[2] / z, p[3] / z});
    CHECK(f[0] + f[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(f[6] + f[7] + f[8] + f[9] == 1.0);
    CHECK(f[5] == 1.0 - f[6]);
  }
}

TEST_CASE("syntax and sentiment blocks") {
  CHECK(syntax_features(SyntaxProfile{}) == std::array<double, kNumSyntaxLabels>{});
  SyntaxProfile p;
  p["NP"] = 2;
  p["VP"] = 1;
  const auto f = syntax_features(p);
  for (std::size_t i = 0; i < kNumSyntaxLabels; ++i) {
    const double want = i == syntax_label_index("NP") ? 2 : i == syntax_label_index("VP") ? 1 : 0;
    CHECK(f[i] == want);
  }
  const auto cat = syntax_features(ReferenceChunker().syntax("The cat sat."));
  CHECK(cat[syntax_label_index("NP")] == 1);
  CHECK(cat[syntax_label_index("S")] == 1);

  CHECK(sentiment_features(SentimentScores{}) == std::array<double, 4>{0, 1, 0, 0});
  const auto s = sentiment_features(LexiconSentimentAnalyzer().sentiment("This is good."));
  CHECK(s[0] == doctest::Approx(2.9 / 4.9));
  CHECK(s[1] == doctest::Approx(2.0 / 4.9));
  CHECK(s[2] == 0.0);
  CHECK(s[3] == doctest::Approx(1.9 / std::sqrt(1.9 * 1.9 + 15)));
}

TEST_CASE("assembly composes the provider outputs") {
  Fixture fx;
  auto providers = make_reference_providers(16);
  const auto schema = FeatureSchema::make(kAllGroups, 16);
  const auto& art = fx.articles[0];
  REQUIRE(art.sentences.size() >= 3);

  for (const auto& rec : fx.records) {
    if (rec.article_id != art.id) continue;
    const auto v = assemble(rec, art, providers, schema).values;
    REQUIRE(v.size() == schema.size());
    const auto& text = art.sentences[rec.sentence_index - 1].text;
    CHECK(v[0] == doctest::Approx(double(rec.sentence_index) / art.sentences.size()));
    const auto title_vec = providers.encoder->encode(art.sentences[0].text).vector;
    const auto own_vec = providers.encoder->encode(text).vector;
    if (rec.sentence_index == 1) {
      CHECK(v[1] == 1.0);
    } else {
      CHECK(v[1] == doctest::Approx(cosine_similarity(title_vec, own_vec)));
    }
    const auto stn = stance_features(providers.stance->stance(text, art.sentences[0].text));
    for (std::size_t i = 0; i < 10; ++i) CHECK(v[2 + i] == doctest::Approx(stn[i]));
    const auto dp = syntax_features(providers.syntax->syntax(text));
    for (std::size_t i = 0; i < kNumSyntaxLabels; ++i) CHECK(v[12 + i] == dp[i]);
    const auto se = sentiment_features(providers.sentiment->sentiment(text));
    for (std::size_t i = 0; i < 4; ++i) CHECK(v[39 + i] == doctest::Approx(se[i]));
    CHECK(v[43] == doctest::Approx(providers.document->doc_score(art).score));
    for (std::size_t i = 0; i < 16; ++i) CHECK(v[44 + i] == doctest::Approx(own_vec[i]));
  }
}

TEST_CASE("table assembly is worker-independent and round-trips") {
  Fixture fx;
  auto providers = make_reference_providers();
  const auto schema = FeatureSchema::interpretable();
  const auto one = assemble_table(fx.articles, fx.records, providers, schema, 1);
  const auto four = assemble_table(fx.articles, fx.records, providers, schema, 4);
  CHECK(one.rows() == fx.records.size());
  CHECK(one.values.data() == four.values.data());
  CHECK(one.keys == four.keys);
  CHECK(one.to_csv() == four.to_csv());

  const auto back = FeatureTable::from_csv(one.to_csv(), schema);
  CHECK(back.keys == one.keys);
  CHECK(back.values.data() == one.values.data());
  CHECK_THROWS_AS(FeatureTable::from_csv(one.to_csv(), FeatureSchema::make(kAllGroups, 4)),
                  ValidationError);
  CHECK_THROWS_AS(FeatureTable::from_csv("", schema), ValidationError);

  const Split train[] = {Split::Train};
  const auto t = one.select(train);
  CHECK(t.rows() > 0);
  for (const auto& k : t.keys) CHECK(k.split == Split::Train);
  CHECK(t.rows() < one.rows());

  auto orphan = fx.records;
  orphan[0].article_id = "9999";
  CHECK_THROWS_AS(assemble_table(fx.articles, orphan, providers, schema), ValidationError);
}

TEST_CASE("provider failures name the sentence") {
  Fixture fx;
  auto providers = make_reference_providers();
  providers.stance = std::make_shared<FailingStance>();
  const auto schema = FeatureSchema::interpretable();
  try {
    assemble_table(fx.articles, fx.records, providers, schema, 2);
    FAIL("expected a provider error");
  } catch (const ProviderError& e) {
    CHECK(e.retryable());
    CHECK(std::string(e.what()).find("stance backend refused") != std::string::npos);
    CHECK(std::string(e.what()).find("article 1002 sentence 3") != std::string::npos);
  }
  // Without the stance group the failing backend is never consulted.
  const FeatureGroup no_stance[] = {FeatureGroup::Rp, FeatureGroup::Dp};
  CHECK_NOTHROW(assemble_table(fx.articles, fx.records, providers,
                               FeatureSchema::make(no_stance)));
}

TEST_CASE("standardizer") {
  Matrix m;
  const double rows[3][2] = {{1, 5}, {2, 5}, {3, 5}};
  for (auto& r : rows) m.append_row(r);
  CHECK_THROWS_AS(Standardizer().transform(m), StateError);
  const auto st = Standardizer::fit(m);
  const auto z = st.transform(m);
  CHECK(z(0, 0) == doctest::Approx(-1.2247).epsilon(1e-3));
  CHECK(z(1, 0) == doctest::Approx(0.0));
  CHECK(z(2, 0) == doctest::Approx(1.2247).epsilon(1e-3));
  for (std::size_t r = 0; r < 3; ++r) CHECK(z(r, 1) == 0.0);
  const auto back = st.inverse_transform(z);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 2; ++c) CHECK(back(r, c) == doctest::Approx(m(r, c)));
  }
  CHECK_THROWS_AS(st.transform(Matrix(2, 3)), ValidationError);
  CHECK_THROWS_AS(Standardizer::fit(Matrix()), ValidationError);

  // Random property check on wider data.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(4.0, 9.0);
  Matrix train(200, 6), dev(50, 6);
  for (std::size_t r = 0; r < 200; ++r) {
    for (std::size_t c = 0; c < 6; ++c) train(r, c) = n(rng) * double(c + 1);
  }
  for (std::size_t r = 0; r < 50; ++r) {
    for (std::size_t c = 0; c < 6; ++c) dev(r, c) = n(rng) + 100.0;
  }
  const auto s2 = Standardizer::fit(train);
  const auto zt = s2.transform(train);
  for (std::size_t c = 0; c < 6; ++c) {
    double mean = 0, var = 0;
    for (std::size_t r = 0; r < 200; ++r) mean += zt(r, c);
    mean /= 200;
    for (std::size_t r = 0; r < 200; ++r) var += (zt(r, c) - mean) * (zt(r, c) - mean);
    var /= 200;
    CHECK(std::fabs(mean) < 1e-9);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
  }
  const auto zd = s2.transform(dev);
  CHECK(std::fabs(zd(0, 0)) > 1.0);
  const auto rt = s2.inverse_transform(zt);
  for (std::size_t i = 0; i < train.data().size(); ++i) {
    CHECK(std::fabs(rt.data()[i] - train.data()[i]) < 1e-9);
  }
  const auto row = s2.transform(train.row(7));
  for (std::size_t c = 0; c < 6; ++c) CHECK(row[c] == zt(7, c));
}

TEST_CASE("drop_group") {
  const auto s = FeatureSchema::interpretable();
  Matrix m(3, s.size());
  for (std::size_t c = 0; c < s.size(); ++c) m(1, c) = double(c);
  const auto [dp_m, dp_s] = drop_group(m, s, FeatureGroup::Dp);
  CHECK(dp_s.size() == 17);
  CHECK(dp_m.cols() == 17);
  CHECK(dp_m(1, 12) == 39.0);
  CHECK(drop_group(m, s, FeatureGroup::Sent).second.size() == 40);

  const auto names = s.names();
  std::vector<std::string> expected;
  for (const auto& c : s.columns()) {
    if (c.group != FeatureGroup::Dp) expected.push_back(c.name);
  }
  CHECK(dp_s.names() == expected);
  CHECK_THROWS_AS(drop_group(m, s, FeatureGroup::Emb), ValidationError);
  CHECK_THROWS_AS(drop_group(Matrix(1, 3), s, FeatureGroup::Dp), ValidationError);

  FeatureTable t;
  t.schema = s;
  t.values = m;
  t.keys.resize(3);
  const auto dropped = drop_group(t, FeatureGroup::Rp);
  CHECK(dropped.schema.size() == 43);
  CHECK(dropped.values(1, 0) == 1.0);
  CHECK(dropped.rows() == 3);
}
