#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "propdetect/corpus.hpp"

namespace propdetect {

struct SentenceEncoding {
  std::vector<double> vector;
};

/// Probabilities over the four base stance classes. `related` is derived.
struct StanceDistribution {
  double unrelated = 1.0;
  double agree = 0.0;
  double disagree = 0.0;
  double discuss = 0.0;

  double related() const { return agree + disagree + discuss; }
  /// Throws ValidationError unless all entries are non-negative and sum to 1 within 1e-9.
  void validate() const;
};

enum class StanceClass { Unrelated = 0, Agree, Disagree, Discuss };

/// Argmax over the base classes; ties go to the earlier class in the order
/// unrelated, agree, disagree, discuss.
StanceClass argmax(const StanceDistribution& dist);

inline constexpr std::size_t kNumSyntaxLabels = 27;

/// Clause labels, phrase labels, then `unknown`. This is also the serialization order.
const std::array<std::string_view, kNumSyntaxLabels>& syntax_labels();
/// Position of `label` in syntax_labels(), or kNumSyntaxLabels - 1 (`unknown`) if absent.
std::size_t syntax_label_index(std::string_view label);

struct SyntaxProfile {
  std::array<int, kNumSyntaxLabels> counts{};

  int& operator[](std::string_view label) { return counts[syntax_label_index(label)]; }
  int operator[](std::string_view label) const { return counts[syntax_label_index(label)]; }
  int total() const;
};

struct SentimentScores {
  double positive = 0.0;
  double neutral = 1.0;
  double negative = 0.0;
  double compound = 0.0;

  void validate() const;
};

struct DocScore {
  double score = 0.5;
};

// The five external models, each behind its own narrow interface.

class SentenceEncoder {
 public:
  virtual ~SentenceEncoder() = default;
  virtual std::size_t dimension() const = 0;
  virtual SentenceEncoding encode(std::string_view text) = 0;
};

class StanceClassifier {
 public:
  virtual ~StanceClassifier() = default;
  virtual StanceDistribution stance(std::string_view sentence, std::string_view title) = 0;
};

class SyntaxAnalyzer {
 public:
  virtual ~SyntaxAnalyzer() = default;
  virtual SyntaxProfile syntax(std::string_view sentence) = 0;
};

class SentimentAnalyzer {
 public:
  virtual ~SentimentAnalyzer() = default;
  virtual SentimentScores sentiment(std::string_view sentence) = 0;
};

class DocumentScorer {
 public:
  virtual ~DocumentScorer() = default;
  virtual DocScore doc_score(const Article& article) = 0;
};

struct Providers {
  std::shared_ptr<SentenceEncoder> encoder;
  std::shared_ptr<StanceClassifier> stance;
  std::shared_ptr<SyntaxAnalyzer> syntax;
  std::shared_ptr<SentimentAnalyzer> sentiment;
  std::shared_ptr<DocumentScorer> document;
};

enum class BackendKind { Reference, Subprocess, Http };

/// Provider configuration, usually read from the `providers` object of a JSON config file:
/// `{"backend": "reference"|"subprocess"|"http", "endpoint": "...", "dimension": 64,
///   "timeout_ms": 30000}`.
struct ProviderConfig {
  BackendKind backend = BackendKind::Reference;
  std::string endpoint;  // command line for subprocess, URL for http
  std::size_t dimension = 64;
  int timeout_ms = 30000;
};

ProviderConfig provider_config_from_json(std::string_view json_text);
/// Applies the PROVIDER_URL environment override, if set.
void apply_environment(ProviderConfig& config);

/// Builds the provider bundle for a configuration.
Providers make_providers(const ProviderConfig& config);

}  // namespace propdetect
