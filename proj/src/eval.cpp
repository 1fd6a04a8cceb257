#include "propdetect/eval.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "propdetect/errors.hpp"
#include "propdetect/util.hpp"

namespace propdetect {
namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw ValidationError("label sequences differ in length: " + std::to_string(a) + " vs " +
                          std::to_string(b));
  }
}

std::string pct(double fraction) { return format_fixed(100.0 * fraction, 2); }

std::string csv_quote(std::string_view s) {
  if (s.find_first_of(",\"") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string pad_left(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

}  // namespace

double f1_score(double precision, double recall) {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

ClassMetrics prf(std::span<const int> y_true, std::span<const int> y_pred, int cls,
                 std::string name) {
  check_lengths(y_true.size(), y_pred.size());
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool actual = y_true[i] == cls;
    const bool predicted = y_pred[i] == cls;
    tp += actual && predicted;
    fp += !actual && predicted;
    fn += actual && !predicted;
  }
  ClassMetrics m;
  m.name = name.empty() ? std::to_string(cls) : std::move(name);
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = f1_score(m.precision, m.recall);
  m.support = tp + fn;
  return m;
}

AggregateMetrics weighted_average(std::span<const ClassMetrics> metrics) {
  AggregateMetrics out;
  for (const auto& m : metrics) {
    const double w = static_cast<double>(m.support);
    out.precision += w * m.precision;
    out.recall += w * m.recall;
    out.f1 += w * m.f1;
    out.support += m.support;
  }
  if (out.support == 0) throw ValidationError("weighted average over zero total support");
  const double total = static_cast<double>(out.support);
  out.precision /= total;
  out.recall /= total;
  out.f1 /= total;
  return out;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          std::size_t n_classes) {
  check_lengths(y_true.size(), y_pred.size());
  ConfusionMatrix counts(n_classes, std::vector<std::size_t>(n_classes, 0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const auto t = static_cast<std::size_t>(y_true[i]);
    const auto p = static_cast<std::size_t>(y_pred[i]);
    if (y_true[i] < 0 || y_pred[i] < 0 || t >= n_classes || p >= n_classes) {
      throw ValidationError("class id outside the confusion matrix");
    }
    ++counts[t][p];
  }
  return counts;
}

std::vector<int> label_ids(std::span<const TechniqueLabel> labels) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (auto l : labels) out.push_back(label_index(l));
  return out;
}

std::vector<ClassMetrics> per_label_metrics(std::span<const TechniqueLabel> y_true,
                                            std::span<const TechniqueLabel> y_pred) {
  const auto t = label_ids(y_true);
  const auto p = label_ids(y_pred);
  std::vector<ClassMetrics> rows;
  for (auto label : all_labels()) {
    rows.push_back(prf(t, p, label_index(label), std::string(display_name(label))));
  }
  return rows;
}

EvaluationResult evaluate_multiclass(std::span<const TechniqueLabel> y_true,
                                     std::span<const TechniqueLabel> y_pred) {
  EvaluationResult r;
  r.per_class = per_label_metrics(y_true, y_pred);
  r.weighted = weighted_average(r.per_class);
  r.confusion = confusion(label_ids(y_true), label_ids(y_pred), kNumLabels);
  return r;
}

EvaluationResult evaluate_binary(std::span<const int> y_true, std::span<const int> y_pred) {
  EvaluationResult r;
  r.per_class.push_back(prf(y_true, y_pred, 0, "Non-propaganda"));
  r.per_class.push_back(prf(y_true, y_pred, 1, "Propaganda"));
  const auto& pos = r.per_class[1];
  r.weighted = {pos.precision, pos.recall, pos.f1, pos.support};
  r.confusion = confusion(y_true, y_pred, 2);
  return r;
}

std::string EvaluationResult::to_json() const {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& m : per_class) {
    per.push_back({{"class", m.name},
                   {"precision", m.precision},
                   {"recall", m.recall},
                   {"f1", m.f1},
                   {"support", m.support}});
  }
  nlohmann::json root{{"per_class", per},
                      {"weighted",
                       {{"precision", weighted.precision},
                        {"recall", weighted.recall},
                        {"f1", weighted.f1},
                        {"support", weighted.support}}},
                      {"confusion", confusion}};
  return root.dump(2) + "\n";
}

std::string render_score_table_text(std::string_view title, std::string_view first_column,
                                    std::span<const ScoreRow> rows) {
  std::size_t width = first_column.size();
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::string out;
  if (!title.empty()) out += std::string(title) + "\n";
  out += pad_right(std::string(first_column), width) + "  " + pad_left("P", 6) + "  " +
         pad_left("R", 6) + "  " + pad_left("F1", 6) + "\n";
  out += std::string(width + 24, '-') + "\n";
  for (const auto& r : rows) {
    out += pad_right(r.name, width) + "  " + pad_left(pct(r.precision), 6) + "  " +
           pad_left(pct(r.recall), 6) + "  " + pad_left(pct(r.f1), 6) + "\n";
  }
  return out;
}

std::string render_score_table_csv(std::string_view first_column, std::span<const ScoreRow> rows) {
  std::string out = csv_quote(first_column) + ",P,R,F1\n";
  for (const auto& r : rows) {
    out += csv_quote(r.name) + "," + pct(r.precision) + "," + pct(r.recall) + "," + pct(r.f1) +
           "\n";
  }
  return out;
}

std::string render_class_table_text(std::span<const ClassMetrics> rows,
                                    const AggregateMetrics& weighted) {
  std::size_t width = std::string_view("weighted avg").size();
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::string out = pad_right("Technique", width) + "  " + pad_left("P", 6) + "  " +
                    pad_left("R", 6) + "  " + pad_left("F1", 6) + "  " + pad_left("#", 6) + "\n";
  out += std::string(width + 32, '-') + "\n";
  auto line = [&](const std::string& name, double p, double r, double f, std::size_t n) {
    out += pad_right(name, width) + "  " + pad_left(pct(p), 6) + "  " + pad_left(pct(r), 6) +
           "  " + pad_left(pct(f), 6) + "  " + pad_left(std::to_string(n), 6) + "\n";
  };
  for (const auto& r : rows) line(r.name, r.precision, r.recall, r.f1, r.support);
  out += std::string(width + 32, '-') + "\n";
  line("weighted avg", weighted.precision, weighted.recall, weighted.f1, weighted.support);
  return out;
}

std::string render_class_table_csv(std::span<const ClassMetrics> rows,
                                   const AggregateMetrics& weighted) {
  std::string out = "technique,P,R,F1,support\n";
  for (const auto& r : rows) {
    out += csv_quote(r.name) + "," + pct(r.precision) + "," + pct(r.recall) + "," + pct(r.f1) +
           "," + std::to_string(r.support) + "\n";
  }
  out += "weighted avg," + pct(weighted.precision) + "," + pct(weighted.recall) + "," +
         pct(weighted.f1) + "," + std::to_string(weighted.support) + "\n";
  return out;
}

}  // namespace propdetect
