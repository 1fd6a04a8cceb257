#pragma once

// Deterministic offline backends. Every one of them is a pure function of its input, so they
// are safe to call concurrently and give byte-identical results across runs.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "propdetect/providers.hpp"

namespace propdetect {

/// Lowercased word tokens (letters, digits, inner apostrophes and hyphens).
std::vector<std::string> word_tokens(std::string_view text);

/// Feature-hashed character trigrams of the lowercased, space-padded text, signed by a second
/// hash bit, then L2-normalized. Empty text maps to the zero vector.
class HashingEncoder : public SentenceEncoder {
 public:
  explicit HashingEncoder(std::size_t dimension = 64);
  std::size_t dimension() const override { return dimension_; }
  SentenceEncoding encode(std::string_view text) override;

 private:
  std::size_t dimension_;
};

/// Lexical-overlap stance heuristic.
///
/// Let o be the Jaccard overlap of the content-word sets of sentence and title, `neg` = 1 if
/// the sentence has a negation or refutation cue, `hedge` = 1 if it has a reporting or hedging
/// cue. The distribution is the softmax of the logits
///   unrelated = 1 - 6o
///   agree     = 5o - 2neg - hedge
///   disagree  = 5o*neg + neg - 1.5
///   discuss   = 4o + 1.5hedge - 1
class LexicalStanceClassifier : public StanceClassifier {
 public:
  StanceDistribution stance(std::string_view sentence, std::string_view title) override;
};

/// Rule-based shallow parser: lexicon + suffix part-of-speech guesses, then chunk rules for
/// noun, verb, prepositional, adjective, adverb and wh- phrases, subordinate clauses,
/// parentheticals and particles, and one root clause label per sentence. Tokens left outside
/// every phrase count as `unknown`.
class ReferenceChunker : public SyntaxAnalyzer {
 public:
  SyntaxProfile syntax(std::string_view sentence) override;
};

/// Polarity-lexicon sentiment.
///
/// Each token found in the bundled lexicon contributes its valence (-4..4), scaled by a
/// preceding booster word (x1.3 or x0.7), flipped and damped (x -0.74) when one of the three
/// previous tokens is a negator, and boosted by 0.733 in the direction of its sign when written
/// in capitals inside mixed-case text. Exclamation marks (up to four) add 0.292 each to the
/// magnitude of a non-zero sum. Then
///   compound = s / sqrt(s^2 + 15)
///   positive, negative = sum of (|v| + 1) over positive or negative tokens, neutral = count of
///   zero-valence tokens, all three divided by their total.
/// Text without tokens is (0, 1, 0, 0).
class LexiconSentimentAnalyzer : public SentimentAnalyzer {
 public:
  SentimentScores sentiment(std::string_view sentence) override;
};

/// Document score = logistic(mean |compound| over the article's sentences).
class SentimentDocumentScorer : public DocumentScorer {
 public:
  explicit SentimentDocumentScorer(std::shared_ptr<SentimentAnalyzer> sentiment = nullptr);
  DocScore doc_score(const Article& article) override;

 private:
  std::shared_ptr<SentimentAnalyzer> sentiment_;
};

Providers make_reference_providers(std::size_t dimension = 64);

}  // namespace propdetect
