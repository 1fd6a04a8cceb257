#include "propdetect/explain.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

#include <json.hpp>

#include "propdetect/errors.hpp"
#include "propdetect/parallel.hpp"
#include "propdetect/util.hpp"

namespace propdetect {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 4> kStanceBase{"unrelated", "agree", "disagree", "discuss"};
constexpr std::array<std::string_view, 5> kStanceProbs{"related", "unrelated", "agree", "disagree",
                                                       "discuss"};
constexpr std::array<std::string_view, 4> kSentiment{"positive", "neutral", "negative", "compound"};

bool is_propaganda_class(const TrainedModel& model, int cls) {
  return model.mode == TaskMode::Binary ? cls == 1 : cls != label_index(TechniqueLabel::NonPropaganda);
}

Evidence collect_evidence(const FeatureSchema& schema, std::span<const double> raw,
                          std::size_t topk) {
  Evidence e;
  auto value = [&](std::string_view name) -> std::optional<double> {
    if (auto i = schema.index_of(name)) return raw[*i];
    return std::nullopt;
  };
  e.relative_position = value("rp");
  e.title_similarity = value("sim");
  e.document_score = value("doc");
  if (schema.has_group(FeatureGroup::Stn)) {
    StanceEvidence s;
    for (auto name : kStanceProbs) {
      s.probabilities[std::string(name)] = *value("stn_p_" + std::string(name));
    }
    for (auto name : kStanceBase) {
      if (*value("stn_is_" + std::string(name)) > 0.5) s.label = std::string(name);
    }
    e.stance = std::move(s);
  }
  if (schema.has_group(FeatureGroup::Dp)) {
    std::vector<std::pair<std::string, int>> counts;
    for (auto label : syntax_labels()) {
      const int n = static_cast<int>(*value("dp_" + std::string(label)));
      if (n > 0) counts.emplace_back(std::string(label), n);
    }
    std::stable_sort(counts.begin(), counts.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (counts.size() > topk) counts.resize(topk);
    e.syntax = std::move(counts);
  }
  if (schema.has_group(FeatureGroup::Sent)) {
    std::map<std::string, double> s;
    for (auto name : kSentiment) s[std::string(name)] = *value("sent_" + std::string(name));
    e.sentiment = std::move(s);
  }
  return e;
}

json to_json(const SentenceExplanation& s) {
  json ev = json::object();
  const auto& e = s.evidence;
  ev["relative_position"] = e.relative_position ? json(*e.relative_position) : json(nullptr);
  ev["title_similarity"] = e.title_similarity ? json(*e.title_similarity) : json(nullptr);
  if (e.stance) {
    ev["stance"] = {{"label", e.stance->label}, {"probabilities", e.stance->probabilities}};
  } else {
    ev["stance"] = nullptr;
  }
  json syn = json::array();
  for (const auto& [label, count] : e.syntax) syn.push_back({{"label", label}, {"count", count}});
  ev["syntax"] = syn;
  ev["sentiment"] = e.sentiment ? json(*e.sentiment) : json(nullptr);
  ev["document_score"] = e.document_score ? json(*e.document_score) : json(nullptr);

  json scores = json::array();
  for (const auto& [name, v] : s.scores) scores.push_back({{"class", name}, {"score", v}});
  json rationale = json::array();
  for (const auto& r : s.rationale) {
    rationale.push_back({{"feature", r.feature}, {"covariance", r.covariance}, {"value", r.value}});
  }
  return {{"article_id", s.article_id},
          {"index", s.index},
          {"text", s.text},
          {"predicted", s.predicted},
          {"propaganda", s.propaganda},
          {"scores", scores},
          {"evidence", ev},
          {"rationale", rationale},
          {"features", s.raw_features},
          {"standardized_features", s.standardized_features},
          {"error", s.error ? json(*s.error) : json(nullptr)}};
}

template <typename T>
std::optional<T> opt(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<T>();
}

SentenceExplanation sentence_from_json(const json& j) {
  SentenceExplanation s;
  s.article_id = j.at("article_id").get<std::string>();
  s.index = j.at("index").get<int>();
  s.text = j.at("text").get<std::string>();
  s.predicted = j.at("predicted").get<std::string>();
  s.propaganda = j.at("propaganda").get<bool>();
  for (const auto& sc : j.at("scores")) {
    s.scores.emplace_back(sc.at("class").get<std::string>(), sc.at("score").get<double>());
  }
  const auto& ev = j.at("evidence");
  auto& e = s.evidence;
  e.relative_position = opt<double>(ev, "relative_position");
  e.title_similarity = opt<double>(ev, "title_similarity");
  if (const auto& st = ev.at("stance"); !st.is_null()) {
    e.stance = StanceEvidence{st.at("label").get<std::string>(),
                              st.at("probabilities").get<std::map<std::string, double>>()};
  }
  for (const auto& d : ev.at("syntax")) {
    e.syntax.emplace_back(d.at("label").get<std::string>(), d.at("count").get<int>());
  }
  e.sentiment = opt<std::map<std::string, double>>(ev, "sentiment");
  e.document_score = opt<double>(ev, "document_score");
  for (const auto& r : j.at("rationale")) {
    s.rationale.push_back({r.at("feature").get<std::string>(), r.at("covariance").get<double>(),
                           r.at("value").get<double>()});
  }
  s.raw_features = j.at("features").get<std::map<std::string, double>>();
  s.standardized_features = j.at("standardized_features").get<std::map<std::string, double>>();
  s.error = opt<std::string>(j, "error");
  return s;
}

json to_json(const DocumentExplanation& d) {
  json sentences = json::array();
  for (const auto& s : d.sentences) sentences.push_back(to_json(s));
  const auto& m = d.summary;
  return {{"article_id", d.article_id},
          {"title", d.title},
          {"summary",
           {{"sentences", m.sentences},
            {"propaganda", m.propaganda},
            {"histogram", m.histogram},
            {"document_score", m.document_score ? json(*m.document_score) : json(nullptr)},
            {"errors", m.errors}}},
          {"sentences", sentences}};
}

std::string html_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

// Stable colour per class name; non-propaganda stays unshaded.
std::string class_colour(const SentenceExplanation& s) {
  if (s.error) return "#dddddd";
  if (!s.propaganda) return "transparent";
  const auto h = fnv1a64(s.predicted);
  const int hue = static_cast<int>(h % 360);
  return "hsl(" + std::to_string(hue) + ",70%,82%)";
}

std::string fmt(double v) { return format_fixed(v, 4); }

std::string render_html(std::span<const DocumentExplanation> documents) {
  std::string out =
      "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
      "<title>Propaganda explanation report</title>\n<style>\n"
      "body{font-family:sans-serif;max-width:60em;margin:2em auto;line-height:1.4}\n"
      "details.sentence{margin:.3em 0;padding:.2em .5em;border-radius:4px}\n"
      "details.sentence summary{cursor:pointer}\n"
      ".label{font-size:.8em;font-weight:bold;margin-right:.5em}\n"
      "table{border-collapse:collapse;font-size:.85em;margin:.3em 0}\n"
      "td,th{border:1px solid #ccc;padding:.1em .4em;text-align:left}\n"
      ".error{color:#a00}\n</style>\n</head>\n<body>\n";
  if (documents.empty()) out += "<p>No documents.</p>\n";
  for (const auto& d : documents) {
    const auto& m = d.summary;
    out += "<section class=\"document\" data-article=\"" + html_escape(d.article_id) + "\">\n";
    out += "<h2>" + html_escape(d.title) + "</h2>\n<p>Article " + html_escape(d.article_id) +
           ": " + std::to_string(m.propaganda) + " of " + std::to_string(m.sentences) +
           " sentences flagged";
    if (m.document_score) out += "; document score " + fmt(*m.document_score);
    out += ".</p>\n";
    if (!m.histogram.empty()) {
      out += "<table class=\"histogram\"><tr><th>Prediction</th><th>Sentences</th></tr>\n";
      for (const auto& [name, count] : m.histogram) {
        out += "<tr><td>" + html_escape(name) + "</td><td>" + std::to_string(count) +
               "</td></tr>\n";
      }
      out += "</table>\n";
    }
    for (const auto& s : d.sentences) {
      out += "<details class=\"sentence\" data-index=\"" + std::to_string(s.index) +
             "\" data-label=\"" + html_escape(s.predicted) + "\" style=\"background:" +
             class_colour(s) + "\">\n<summary><span class=\"label\">" +
             html_escape(s.error ? "error" : s.predicted) + "</span>" + html_escape(s.text) +
             "</summary>\n";
      if (s.error) {
        out += "<p class=\"error\">" + html_escape(*s.error) + "</p>\n</details>\n";
        continue;
      }
      const auto& e = s.evidence;
      out += "<table class=\"evidence\">\n";
      auto row = [&](std::string_view k, const std::string& v) {
        out += "<tr><th>" + std::string(k) + "</th><td>" + v + "</td></tr>\n";
      };
      if (e.relative_position) row("Relative position", fmt(*e.relative_position));
      if (e.title_similarity) row("Title similarity", fmt(*e.title_similarity));
      if (e.stance) {
        std::string v = html_escape(e.stance->label) + " (";
        bool first = true;
        for (const auto& [k, p] : e.stance->probabilities) {
          v += (first ? "" : ", ") + k + " " + fmt(p);
          first = false;
        }
        row("Stance", v + ")");
      }
      if (!e.syntax.empty()) {
        std::string v;
        for (const auto& [label, count] : e.syntax) {
          v += (v.empty() ? "" : ", ") + html_escape(label) + " " + std::to_string(count);
        }
        row("Syntax", v);
      }
      if (e.sentiment) {
        std::string v;
        for (const auto& [k, p] : *e.sentiment) v += (v.empty() ? "" : ", ") + k + " " + fmt(p);
        row("Sentiment", v);
      }
      if (e.document_score) row("Document score", fmt(*e.document_score));
      out += "</table>\n";
      if (!s.rationale.empty()) {
        out += "<table class=\"rationale\"><tr><th>Feature</th><th>|cov|</th><th>Value</th></tr>\n";
        for (const auto& r : s.rationale) {
          out += "<tr><td>" + html_escape(r.feature) + "</td><td>" + format_fixed(r.covariance, 6) +
                 "</td><td>" + fmt(r.value) + "</td></tr>\n";
        }
        out += "</table>\n";
      }
      out += "</details>\n";
    }
    out += "</section>\n";
  }
  out += "</body>\n</html>\n";
  return out;
}

}  // namespace

std::string class_name(const TrainedModel& model, int cls) {
  if (model.mode == TaskMode::Binary) return cls == 1 ? "propaganda" : "non-propaganda";
  return std::string(to_string(label_from_index(cls)));
}

SentenceExplanation explain_sentence(const SentenceRecord& record, std::span<const double> raw,
                                     const TrainedModel& model, const CovarianceMatrix& cm,
                                     std::size_t k) {
  const auto& schema = model.schema;
  if (raw.size() != model.n_features || raw.size() != schema.size()) {
    throw ValidationError("feature vector has " + std::to_string(raw.size()) +
                          " values, model expects " + std::to_string(model.n_features));
  }
  const auto names = schema.names();
  if (cm.features != names) {
    throw ValidationError("covariance matrix was computed on a different feature schema");
  }

  Matrix row(1, raw.size());
  std::copy(raw.begin(), raw.end(), row.row(0).begin());
  const Matrix z = model.standardizer.fitted() ? model.standardizer.transform(row) : row;
  const auto prediction = predict(model, z).front();

  SentenceExplanation s;
  s.article_id = record.article_id;
  s.index = record.sentence_index;
  s.text = record.text;
  s.predicted = class_name(model, prediction.label);
  s.propaganda = is_propaganda_class(model, prediction.label);
  for (std::size_t c = 0; c < model.classes.size(); ++c) {
    s.scores.emplace_back(class_name(model, model.classes[c]), prediction.scores[c]);
  }
  s.evidence = collect_evidence(schema, raw, std::max<std::size_t>(k, 5));
  for (std::size_t i = 0; i < names.size(); ++i) {
    s.raw_features[names[i]] = raw[i];
    s.standardized_features[names[i]] = z(0, i);
  }

  if (!s.propaganda || k == 0) return s;
  std::vector<RationaleEntry> candidates;
  for (std::size_t i = 0; i < names.size(); ++i) {
    double cov = -1.0;
    if (model.mode == TaskMode::Binary) {
      for (std::size_t j = 0; j < cm.techniques.size(); ++j) {
        if (cm.passes(i, j)) cov = std::max(cov, cm.values(i, j));
      }
    } else {
      const auto j = cm.technique_column(label_from_index(prediction.label));
      if (cm.passes(i, j)) cov = cm.values(i, j);
    }
    if (cov >= 0.0) candidates.push_back({names[i], cov, raw[i]});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return a.covariance > b.covariance; });
  if (candidates.size() > k) candidates.resize(k);
  s.rationale = std::move(candidates);
  return s;
}

DocumentExplanation explain_document(const Article& article, const TrainedModel& model,
                                     const CovarianceMatrix& cm, Providers& providers,
                                     std::size_t k, unsigned workers) {
  DocumentExplanation doc;
  doc.article_id = article.id;
  doc.title = article.title;
  const int n = static_cast<int>(article.sentences.size());
  doc.sentences.resize(article.sentences.size());
  parallel_for(article.sentences.size(), workers, [&](std::size_t i) {
    const auto& sentence = article.sentences[i];
    SentenceRecord record{article.id, sentence.index, n, sentence.text,
                          TechniqueLabel::NonPropaganda, std::nullopt};
    try {
      const auto fv = assemble(record, article, providers, model.schema);
      doc.sentences[i] = explain_sentence(record, fv.values, model, cm, k);
    } catch (const ProviderError& e) {
      auto& s = doc.sentences[i];
      s.article_id = article.id;
      s.index = sentence.index;
      s.text = sentence.text;
      s.error = e.what();
    }
  });

  auto& m = doc.summary;
  m.sentences = doc.sentences.size();
  for (const auto& s : doc.sentences) {
    if (s.error) {
      ++m.errors;
    } else if (s.propaganda) {
      ++m.propaganda;
      ++m.histogram[s.predicted];
    }
  }
  if (providers.document) {
    try {
      m.document_score = providers.document->doc_score(article).score;
    } catch (const ProviderError&) {
      m.document_score = std::nullopt;
    }
  }
  return doc;
}

std::string render_report(std::span<const DocumentExplanation> documents, std::string_view format) {
  if (format == "json") {
    json docs = json::array();
    for (const auto& d : documents) docs.push_back(to_json(d));
    return json{{"documents", docs}}.dump(2) + "\n";
  }
  if (format == "html") return render_html(documents);
  throw ValidationError("unknown report format '" + std::string(format) + "' (json|html)");
}

std::vector<DocumentExplanation> report_from_json(std::string_view text) {
  try {
    const auto root = json::parse(text);
    std::vector<DocumentExplanation> out;
    for (const auto& dj : root.at("documents")) {
      DocumentExplanation d;
      d.article_id = dj.at("article_id").get<std::string>();
      d.title = dj.at("title").get<std::string>();
      const auto& m = dj.at("summary");
      d.summary.sentences = m.at("sentences").get<std::size_t>();
      d.summary.propaganda = m.at("propaganda").get<std::size_t>();
      d.summary.histogram = m.at("histogram").get<std::map<std::string, std::size_t>>();
      d.summary.document_score = opt<double>(m, "document_score");
      d.summary.errors = m.at("errors").get<std::size_t>();
      for (const auto& sj : dj.at("sentences")) d.sentences.push_back(sentence_from_json(sj));
      out.push_back(std::move(d));
    }
    return out;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad report JSON: ") + e.what());
  }
}

}  // namespace propdetect
