#include "propdetect/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <thread>

#include <json.hpp>

#include "propdetect/util.hpp"

namespace propdetect {
namespace {

constexpr std::array<std::string_view, 5> kStanceClasses{"related", "unrelated", "agree",
                                                         "disagree", "discuss"};
constexpr std::array<std::string_view, 4> kSentimentNames{"positive", "neutral", "negative",
                                                          "compound"};
constexpr std::array<std::string_view, 5> kKeyColumns{"article_id", "index", "n", "split",
                                                      "label"};

std::string csv_field(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> parse_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

double parse_number(std::string_view text, std::size_t line_no) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw ValidationError("features line " + std::to_string(line_no) + ": bad number '" +
                          std::string(text) + "'");
  }
  return value;
}

// Rethrows a provider failure with the sentence named, keeping the error kind.
[[noreturn]] void rethrow_with_context(const SentenceRecord& record) {
  const std::string where =
      "article " + record.article_id + " sentence " + std::to_string(record.sentence_index) + ": ";
  try {
    throw;
  } catch (const ProviderTimeout& e) {
    throw ProviderTimeout(where + e.what());
  } catch (const ProtocolError& e) {
    throw ProtocolError(where + e.what());
  } catch (const ProviderError& e) {
    throw ProviderError(where + e.what(), e.retryable());
  }
}

// Per-article values shared by all of its sentences.
struct ArticleContext {
  std::vector<double> title_encoding;
  double doc_score = 0.0;
};

ArticleContext make_context(const Article& article, Providers& providers,
                            const FeatureSchema& schema) {
  ArticleContext ctx;
  if (schema.has_group(FeatureGroup::Sim)) {
    ctx.title_encoding = providers.encoder->encode(article.title).vector;
  }
  if (schema.has_group(FeatureGroup::Doc)) {
    ctx.doc_score = providers.document->doc_score(article).score;
    if (!std::isfinite(ctx.doc_score)) throw ProtocolError("document score is not finite");
    ctx.doc_score = std::clamp(ctx.doc_score, 0.0, 1.0);
  }
  return ctx;
}

FeatureVector assemble_with(const SentenceRecord& record, const Article& article,
                            Providers& providers, const FeatureSchema& schema,
                            const ArticleContext& ctx) {
  FeatureVector fv;
  fv.values.reserve(schema.size());
  const bool is_title = record.sentence_index == 1;
  for (FeatureGroup group : kAllGroups) {
    if (!schema.has_group(group)) continue;
    switch (group) {
      case FeatureGroup::Rp:
        fv.values.push_back(relative_position(record.sentence_index, record.n_sentences));
        break;
      case FeatureGroup::Sim:
        if (is_title) {
          fv.values.push_back(1.0);
        } else {
          const auto enc = providers.encoder->encode(record.text).vector;
          fv.values.push_back(cosine_similarity(ctx.title_encoding, enc));
        }
        break;
      case FeatureGroup::Stn: {
        auto dist = providers.stance->stance(record.text, is_title ? record.text : article.title);
        dist.validate();
        for (double v : stance_features(dist)) fv.values.push_back(v);
        break;
      }
      case FeatureGroup::Dp:
        for (double v : syntax_features(providers.syntax->syntax(record.text))) {
          fv.values.push_back(v);
        }
        break;
      case FeatureGroup::Sent: {
        const auto scores = providers.sentiment->sentiment(record.text);
        scores.validate();
        for (double v : sentiment_features(scores)) fv.values.push_back(v);
        break;
      }
      case FeatureGroup::Doc:
        fv.values.push_back(ctx.doc_score);
        break;
      case FeatureGroup::Emb: {
        const auto enc = providers.encoder->encode(record.text).vector;
        if (enc.size() != schema.embedding_dim()) {
          throw ProtocolError("embedding has dimension " + std::to_string(enc.size()) +
                              ", schema expects " + std::to_string(schema.embedding_dim()));
        }
        fv.values.insert(fv.values.end(), enc.begin(), enc.end());
        break;
      }
    }
  }
  for (double v : fv.values) {
    if (!std::isfinite(v)) throw ProtocolError("provider produced a non-finite feature value");
  }
  return fv;
}

}  // namespace

std::string_view to_string(FeatureGroup group) {
  switch (group) {
    case FeatureGroup::Rp: return "rp";
    case FeatureGroup::Sim: return "sim";
    case FeatureGroup::Stn: return "stn";
    case FeatureGroup::Dp: return "dp";
    case FeatureGroup::Sent: return "sent";
    case FeatureGroup::Doc: return "doc";
    case FeatureGroup::Emb: return "emb";
  }
  return "rp";
}

FeatureGroup parse_group(std::string_view text) {
  for (FeatureGroup g : kAllGroups) {
    if (to_string(g) == text) return g;
  }
  throw ValidationError("unknown feature group '" + std::string(text) + "'");
}

std::vector<FeatureGroup> parse_groups(std::string_view list) {
  std::vector<FeatureGroup> out;
  for (auto part : split(list, ',')) {
    part = trim(part);
    if (part.empty()) continue;
    const FeatureGroup g = parse_group(part);
    if (std::find(out.begin(), out.end(), g) != out.end()) {
      throw ValidationError("feature group listed twice: " + std::string(part));
    }
    out.push_back(g);
  }
  if (out.empty()) throw ValidationError("no feature groups selected");
  return out;
}

// ---------------------------------------------------------------------------------------------

FeatureSchema FeatureSchema::make(std::span<const FeatureGroup> groups, std::size_t embedding_dim) {
  auto selected = [&](FeatureGroup g) {
    return std::find(groups.begin(), groups.end(), g) != groups.end();
  };
  std::vector<FeatureColumn> cols;
  if (selected(FeatureGroup::Rp)) cols.push_back({"rp", FeatureGroup::Rp});
  if (selected(FeatureGroup::Sim)) cols.push_back({"sim", FeatureGroup::Sim});
  if (selected(FeatureGroup::Stn)) {
    for (auto c : kStanceClasses) cols.push_back({"stn_p_" + std::string(c), FeatureGroup::Stn});
    for (auto c : kStanceClasses) cols.push_back({"stn_is_" + std::string(c), FeatureGroup::Stn});
  }
  if (selected(FeatureGroup::Dp)) {
    for (auto label : syntax_labels()) cols.push_back({"dp_" + std::string(label), FeatureGroup::Dp});
  }
  if (selected(FeatureGroup::Sent)) {
    for (auto s : kSentimentNames) cols.push_back({"sent_" + std::string(s), FeatureGroup::Sent});
  }
  if (selected(FeatureGroup::Doc)) cols.push_back({"doc", FeatureGroup::Doc});
  if (selected(FeatureGroup::Emb)) {
    if (embedding_dim == 0) throw ValidationError("embedding group needs a positive dimension");
    for (std::size_t i = 0; i < embedding_dim; ++i) {
      cols.push_back({"emb_" + std::to_string(i), FeatureGroup::Emb});
    }
  }
  FeatureSchema schema;
  schema.columns_ = std::move(cols);
  return schema;
}

FeatureSchema FeatureSchema::interpretable() {
  static const std::array<FeatureGroup, 6> groups{FeatureGroup::Rp,  FeatureGroup::Sim,
                                                  FeatureGroup::Stn, FeatureGroup::Dp,
                                                  FeatureGroup::Sent, FeatureGroup::Doc};
  return make(groups);
}

FeatureSchema FeatureSchema::from_columns(std::vector<FeatureColumn> columns) {
  std::set<std::string> names;
  int last_group = -1;
  for (const auto& c : columns) {
    if (!names.insert(c.name).second) throw ValidationError("duplicate feature name " + c.name);
    // Non-decreasing canonical group order also makes every block contiguous.
    const int g = static_cast<int>(c.group);
    if (g < last_group) throw ValidationError("feature groups out of canonical order at " + c.name);
    last_group = g;
  }
  FeatureSchema schema;
  schema.columns_ = std::move(columns);
  return schema;
}

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.name);
  return out;
}

std::vector<FeatureGroup> FeatureSchema::groups() const {
  std::vector<FeatureGroup> out;
  for (const auto& c : columns_) {
    if (out.empty() || out.back() != c.group) out.push_back(c.group);
  }
  return out;
}

bool FeatureSchema::has_group(FeatureGroup group) const { return range(group).has_value(); }

std::optional<std::pair<std::size_t, std::size_t>> FeatureSchema::range(FeatureGroup group) const {
  std::size_t begin = columns_.size();
  std::size_t end = 0;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].group != group) continue;
    begin = std::min(begin, i);
    end = i + 1;
  }
  if (end == 0) return std::nullopt;
  return std::make_pair(begin, end);
}

std::size_t FeatureSchema::embedding_dim() const {
  const auto r = range(FeatureGroup::Emb);
  return r ? r->second - r->first : 0;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

std::string FeatureSchema::fingerprint() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& c : columns_) {
    h = fnv1a64(c.name, h);
    h = fnv1a64("/", h);
    h = fnv1a64(to_string(c.group), h);
    h = fnv1a64(";", h);
  }
  return hex64(h);
}

std::string FeatureSchema::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : columns_) {
    cols.push_back({{"name", c.name}, {"group", std::string(to_string(c.group))}});
  }
  nlohmann::json root{{"columns", cols}, {"fingerprint", fingerprint()}};
  return root.dump(2) + "\n";
}

FeatureSchema FeatureSchema::from_json(std::string_view text) {
  try {
    const auto root = nlohmann::json::parse(text);
    const auto& list = root.is_array() ? root : root.at("columns");
    std::vector<FeatureColumn> cols;
    for (const auto& c : list) {
      cols.push_back({c.at("name").get<std::string>(),
                      parse_group(c.at("group").get<std::string>())});
    }
    return from_columns(std::move(cols));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad schema JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------------------------

double relative_position(int index, int n) {
  if (n < 1 || index < 1 || index > n) {
    throw ValidationError("relative position needs 1 <= i <= n, got i=" + std::to_string(index) +
                          " n=" + std::to_string(n));
  }
  return static_cast<double>(index) / static_cast<double>(n);
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ValidationError("cosine of vectors with dimensions " + std::to_string(u.size()) +
                          " and " + std::to_string(v.size()));
  }
  double dot = 0.0;
  double nu = 0.0;
  double nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::array<double, kStanceDims> stance_features(const StanceDistribution& dist) {
  const StanceClass top = argmax(dist);
  return {dist.related(),
          dist.unrelated,
          dist.agree,
          dist.disagree,
          dist.discuss,
          top != StanceClass::Unrelated ? 1.0 : 0.0,
          top == StanceClass::Unrelated ? 1.0 : 0.0,
          top == StanceClass::Agree ? 1.0 : 0.0,
          top == StanceClass::Disagree ? 1.0 : 0.0,
          top == StanceClass::Discuss ? 1.0 : 0.0};
}

std::array<double, kNumSyntaxLabels> syntax_features(const SyntaxProfile& profile) {
  std::array<double, kNumSyntaxLabels> out{};
  for (std::size_t i = 0; i < kNumSyntaxLabels; ++i) out[i] = profile.counts[i];
  return out;
}

std::array<double, kSentimentDims> sentiment_features(const SentimentScores& s) {
  return {s.positive, s.neutral, s.negative, s.compound};
}

FeatureVector assemble(const SentenceRecord& record, const Article& article, Providers& providers,
                       const FeatureSchema& schema) {
  try {
    const auto ctx = make_context(article, providers, schema);
    return assemble_with(record, article, providers, schema, ctx);
  } catch (const ProviderError&) {
    rethrow_with_context(record);
  }
}

// ---------------------------------------------------------------------------------------------

std::vector<TechniqueLabel> FeatureTable::labels() const {
  std::vector<TechniqueLabel> out;
  out.reserve(keys.size());
  for (const auto& k : keys) out.push_back(k.label);
  return out;
}

FeatureTable FeatureTable::select_rows(std::span<const std::size_t> rows) const {
  FeatureTable out;
  out.schema = schema;
  out.values = values.select_rows(rows);
  out.keys.reserve(rows.size());
  for (auto r : rows) out.keys.push_back(keys[r]);
  return out;
}

FeatureTable FeatureTable::select(std::span<const Split> splits) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i].split &&
        std::find(splits.begin(), splits.end(), *keys[i].split) != splits.end()) {
      rows.push_back(i);
    }
  }
  return select_rows(rows);
}

std::string FeatureTable::to_csv() const {
  std::string out;
  for (auto k : kKeyColumns) {
    out += k;
    out += ',';
  }
  const auto names = schema.names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    out += csv_field(names[i]);
    out += i + 1 < names.size() ? ',' : '\n';
  }
  if (names.empty()) out.back() = '\n';
  for (std::size_t r = 0; r < keys.size(); ++r) {
    const auto& k = keys[r];
    out += csv_field(k.article_id) + ',' + std::to_string(k.index) + ',' + std::to_string(k.n) +
           ',' + (k.split ? std::string(to_string(*k.split)) : std::string()) + ',' +
           csv_field(to_string(k.label));
    for (double v : values.row(r)) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

FeatureTable FeatureTable::from_csv(std::string_view text, const FeatureSchema& schema) {
  FeatureTable table;
  table.schema = schema;
  table.values = Matrix(0, schema.size());
  std::size_t line_no = 0;
  bool header_seen = false;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = parse_csv_line(line);
    if (!header_seen) {
      std::vector<std::string> expected(kKeyColumns.begin(), kKeyColumns.end());
      for (auto& n : schema.names()) expected.push_back(n);
      if (fields != expected) {
        throw ValidationError("feature CSV header does not match the schema (fingerprint " +
                              schema.fingerprint() + ")");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != kKeyColumns.size() + schema.size()) {
      throw ValidationError("features line " + std::to_string(line_no) + ": expected " +
                            std::to_string(kKeyColumns.size() + schema.size()) + " fields");
    }
    RowKey key;
    key.article_id = fields[0];
    key.index = static_cast<int>(parse_number(fields[1], line_no));
    key.n = static_cast<int>(parse_number(fields[2], line_no));
    if (!fields[3].empty()) key.split = parse_split(fields[3]);
    key.label = parse_label(fields[4]);
    std::vector<double> row(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
      row[j] = parse_number(fields[kKeyColumns.size() + j], line_no);
    }
    table.keys.push_back(std::move(key));
    table.values.append_row(row);
  }
  if (!header_seen) throw ValidationError("feature CSV is empty");
  return table;
}

std::string FeatureTable::to_jsonl() const {
  std::string out;
  for (std::size_t r = 0; r < keys.size(); ++r) {
    const auto& k = keys[r];
    nlohmann::json row{{"article_id", k.article_id},
                       {"index", k.index},
                       {"n", k.n},
                       {"split", k.split ? nlohmann::json(std::string(to_string(*k.split)))
                                         : nlohmann::json(nullptr)},
                       {"label", std::string(to_string(k.label))}};
    auto vals = values.row(r);
    row["values"] = std::vector<double>(vals.begin(), vals.end());
    out += row.dump() + "\n";
  }
  return out;
}

FeatureTable assemble_table(const std::vector<Article>& articles,
                            const std::vector<SentenceRecord>& records, Providers& providers,
                            const FeatureSchema& schema, unsigned workers) {
  std::map<std::string, std::size_t> article_index;
  for (std::size_t i = 0; i < articles.size(); ++i) article_index[articles[i].id] = i;

  // Group record positions by article so each article's context is computed once.
  std::vector<std::vector<std::size_t>> by_article(articles.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    auto it = article_index.find(records[r].article_id);
    if (it == article_index.end()) {
      throw ValidationError("record references unknown article " + records[r].article_id);
    }
    by_article[it->second].push_back(r);
  }

  std::vector<std::vector<double>> rows(records.size());
  auto run_article = [&](std::size_t a) {
    if (by_article[a].empty()) return;
    const ArticleContext ctx = make_context(articles[a], providers, schema);
    for (auto r : by_article[a]) {
      try {
        rows[r] = assemble_with(records[r], articles[a], providers, schema, ctx).values;
      } catch (const ProviderError&) {
        rethrow_with_context(records[r]);
      }
    }
  };

  workers = std::max(1u, workers);
  if (workers == 1 || articles.size() < 2) {
    for (std::size_t a = 0; a < articles.size(); ++a) run_article(a);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t a = w; a < articles.size(); a += workers) run_article(a);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  FeatureTable table;
  table.schema = schema;
  table.values = Matrix(0, schema.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    table.keys.push_back({rec.article_id, rec.sentence_index, rec.n_sentences, rec.label, rec.split});
    table.values.append_row(rows[r]);
  }
  return table;
}

// ---------------------------------------------------------------------------------------------

Standardizer::Standardizer(std::vector<double> mean, std::vector<double> stddev)
    : mean_(std::move(mean)), stddev_(std::move(stddev)), fitted_(true) {
  if (mean_.size() != stddev_.size()) throw ValidationError("standardizer size mismatch");
  for (double s : stddev_) {
    if (!(s >= 0.0)) throw ValidationError("standard deviation must be non-negative");
  }
}

Standardizer Standardizer::fit(const Matrix& train) {
  const std::size_t cols = train.cols();
  std::vector<double> mean(cols, 0.0);
  std::vector<double> stddev(cols, 0.0);
  const std::size_t n = train.rows();
  if (n == 0) throw ValidationError("cannot fit a standardizer on zero rows");
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < cols; ++c) mean[c] += train(r, c);
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = train(r, c) - mean[c];
      stddev[c] += d * d;
    }
  }
  for (auto& s : stddev) s = std::sqrt(s / static_cast<double>(n));
  return Standardizer(std::move(mean), std::move(stddev));
}

void Standardizer::check(std::size_t cols) const {
  if (!fitted_) throw StateError("standardizer used before fit");
  if (cols != mean_.size()) {
    throw ValidationError("standardizer fitted on " + std::to_string(mean_.size()) +
                          " columns, got " + std::to_string(cols));
  }
}

std::vector<double> Standardizer::transform(std::span<const double> row) const {
  check(row.size());
  std::vector<double> out(row.size());
  for (std::size_t c = 0; c < row.size(); ++c) {
    out[c] = stddev_[c] > 0.0 ? (row[c] - mean_[c]) / stddev_[c] : 0.0;
  }
  return out;
}

Matrix Standardizer::transform(const Matrix& x) const {
  check(x.cols());
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      out(r, c) = stddev_[c] > 0.0 ? (x(r, c) - mean_[c]) / stddev_[c] : 0.0;
    }
  }
  return out;
}

Matrix Standardizer::inverse_transform(const Matrix& z) const {
  check(z.cols());
  Matrix out(z.rows(), z.cols());
  for (std::size_t r = 0; r < z.rows(); ++r) {
    for (std::size_t c = 0; c < z.cols(); ++c) out(r, c) = z(r, c) * stddev_[c] + mean_[c];
  }
  return out;
}

std::pair<Matrix, FeatureSchema> drop_group(const Matrix& matrix, const FeatureSchema& schema,
                                            FeatureGroup group) {
  if (matrix.cols() != schema.size()) {
    throw ValidationError("matrix has " + std::to_string(matrix.cols()) +
                          " columns, schema has " + std::to_string(schema.size()));
  }
  if (!schema.has_group(group)) {
    throw ValidationError("schema has no feature group '" + std::string(to_string(group)) + "'");
  }
  std::vector<std::size_t> keep;
  std::vector<FeatureColumn> cols;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema.columns()[i].group == group) continue;
    keep.push_back(i);
    cols.push_back(schema.columns()[i]);
  }
  return {matrix.select_cols(keep), FeatureSchema::from_columns(std::move(cols))};
}

FeatureTable drop_group(const FeatureTable& table, FeatureGroup group) {
  auto [values, schema] = drop_group(table.values, table.schema, group);
  FeatureTable out;
  out.schema = std::move(schema);
  out.keys = table.keys;
  out.values = std::move(values);
  return out;
}

}  // namespace propdetect
