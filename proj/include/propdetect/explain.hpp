#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "propdetect/analysis.hpp"
#include "propdetect/corpus.hpp"
#include "propdetect/model.hpp"
#include "propdetect/providers.hpp"

namespace propdetect {

struct StanceEvidence {
  std::string label;  // unrelated, agree, disagree or discuss
  std::map<std::string, double> probabilities;

  bool operator==(const StanceEvidence&) const = default;
};

/// Raw feature values grouped for reading. Blocks of groups the schema lacks stay empty.
struct Evidence {
  std::optional<double> relative_position;
  std::optional<double> title_similarity;
  std::optional<StanceEvidence> stance;
  std::vector<std::pair<std::string, int>> syntax;  // top labels by count, non-zero only
  std::optional<std::map<std::string, double>> sentiment;
  std::optional<double> document_score;

  bool operator==(const Evidence&) const = default;
};

struct RationaleEntry {
  std::string feature;
  double covariance = 0.0;  // |cov|
  double value = 0.0;       // the sentence's raw feature value

  bool operator==(const RationaleEntry&) const = default;
};

struct SentenceExplanation {
  std::string article_id;
  int index = 0;
  std::string text;
  /// Canonical technique name (multiclass) or "propaganda" / "non-propaganda" (binary).
  std::string predicted;
  bool propaganda = false;
  std::vector<std::pair<std::string, double>> scores;  // per model class
  Evidence evidence;
  std::vector<RationaleEntry> rationale;
  std::map<std::string, double> raw_features;
  std::map<std::string, double> standardized_features;
  std::optional<std::string> error;  // provider failure; no prediction then

  bool operator==(const SentenceExplanation&) const = default;
};

/// Class name for a model class id.
std::string class_name(const TrainedModel& model, int cls);

/// Explains one raw feature vector. The rationale lists up to `k` unmasked features with the
/// largest |cov| for the predicted technique; a binary propaganda prediction ranks features by
/// their largest |cov| over all techniques. Non-propaganda predictions get no rationale.
SentenceExplanation explain_sentence(const SentenceRecord& record, std::span<const double> raw,
                                     const TrainedModel& model, const CovarianceMatrix& cm,
                                     std::size_t k);

struct DocumentSummary {
  std::size_t sentences = 0;
  std::size_t propaganda = 0;
  std::map<std::string, std::size_t> histogram;  // predicted propaganda classes only
  std::optional<double> document_score;
  std::size_t errors = 0;

  bool operator==(const DocumentSummary&) const = default;
};

struct DocumentExplanation {
  std::string article_id;
  std::string title;
  std::vector<SentenceExplanation> sentences;
  DocumentSummary summary;

  bool operator==(const DocumentExplanation&) const = default;
};

/// Runs providers on every sentence of `article` and explains each. A provider failure is
/// recorded on that sentence and the rest still get explained.
DocumentExplanation explain_document(const Article& article, const TrainedModel& model,
                                     const CovarianceMatrix& cm, Providers& providers,
                                     std::size_t k, unsigned workers = 1);

/// "json" or "html"; anything else is a ValidationError.
std::string render_report(std::span<const DocumentExplanation> documents, std::string_view format);
std::vector<DocumentExplanation> report_from_json(std::string_view text);

}  // namespace propdetect
