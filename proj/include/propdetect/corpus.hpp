#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "propdetect/errors.hpp"
#include "propdetect/labels.hpp"

namespace propdetect {

/// Malformed input row. The message carries the file and line number.
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A sentence of an article. Offsets are byte offsets into the raw file, end exclusive.
struct Sentence {
  int index = 0;  // 1-based; 1 is the title
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Sentence&) const = default;
};

struct Article {
  std::string id;
  std::string raw;    // file contents, byte-exact
  std::string title;  // first line, trimmed
  std::vector<Sentence> sentences;
};

struct SpanAnnotation {
  std::string article_id;
  TechniqueLabel technique = TechniqueLabel::Doubt;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const SpanAnnotation&) const = default;
};

enum class Split { Train, Dev, Test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct SentenceRecord {
  std::string article_id;
  int sentence_index = 1;
  int n_sentences = 1;
  std::string text;
  TechniqueLabel label = TechniqueLabel::NonPropaganda;
  std::optional<Split> split;

  bool operator==(const SentenceRecord&) const = default;
};

/// Builds an Article from raw text, segmenting it.
Article make_article(std::string id, std::string raw);

/// Loads every `article<ID>.txt` in `dir`, ordered by id (shorter ids first, then lexicographic,
/// which is numeric order for numeric ids).
std::vector<Article> load_articles(const std::filesystem::path& dir);

/// Reads `article_id<TAB>technique<TAB>begin<TAB>end` rows. A directory is read file by file
/// (every `*.labels` / `*.tsv` file, sorted by name).
std::vector<SpanAnnotation> load_spans(const std::filesystem::path& path);
std::vector<SpanAnnotation> parse_spans(std::string_view text, std::string_view source = "<spans>");

/// Rule-based sentence splitter.
///
/// Sentence 1 is the first line of the file (the title). The rest of the file is split at
/// newlines, and inside a line after a run of terminal punctuation (`.`, `!`, `?`, plus any
/// closing quotes or brackets) that is followed by whitespace or the end of the line. A single
/// period does not end a sentence when the word before it is a known abbreviation, a single
/// letter, or contains an inner period (`U.S.`), or when the next word starts with a lowercase
/// letter. Ranges are trimmed of whitespace; blank lines produce no sentence.
std::vector<Sentence> segment_sentences(std::string_view raw);
std::vector<Sentence> segment_sentences(const Article& article);

/// Projects fragment annotations onto sentences of one article.
///
/// A sentence takes the technique of the overlapping span with the smallest begin offset.
/// When several distinct techniques share that offset, one is drawn with a generator seeded from
/// (seed, article id, sentence index), so the choice depends only on the spans touching that
/// sentence. Sentences touched by no span are NonPropaganda.
std::vector<SentenceRecord> project_labels(const Article& article,
                                           const std::vector<SpanAnnotation>& spans,
                                           std::uint64_t seed);

/// Projects every article; spans are matched to articles by id.
std::vector<SentenceRecord> project_corpus(const std::vector<Article>& articles,
                                           const std::vector<SpanAnnotation>& spans,
                                           std::uint64_t seed);

using SplitSpec = std::map<std::string, Split>;

/// Reads `article_id<TAB>split` rows.
SplitSpec load_split_spec(const std::filesystem::path& path);
SplitSpec parse_split_spec(std::string_view text, std::string_view source = "<splits>");

struct DataSplit {
  std::vector<SentenceRecord> train;
  std::vector<SentenceRecord> dev;
  std::vector<SentenceRecord> test;

  std::vector<SentenceRecord>& part(Split split);
  const std::vector<SentenceRecord>& part(Split split) const;
};

/// Tags every record with its article's split. Throws ValidationError naming any unmapped id.
DataSplit split_dataset(const std::vector<SentenceRecord>& records, const SplitSpec& split_spec);

/// Fractions of articles with at least one propaganda sentence among the first five sentences,
/// the first three, and the title.
struct BehaviorStats {
  double first5 = 0.0;
  double first3 = 0.0;
  double title = 0.0;
};

BehaviorStats compute_behavior_stats(const std::vector<SentenceRecord>& records);

struct CorpusStats {
  std::size_t total = 0;
  std::size_t propaganda = 0;
  std::size_t articles = 0;
  std::array<std::size_t, kNumLabels> per_label{};
  BehaviorStats behavior;
};

CorpusStats corpus_stats(const std::vector<SentenceRecord>& records);

// Record serialization: JSON lines `{article_id, index, n, text, label, split}` and a TSV with
// the same columns (tabs, newlines and backslashes in text are backslash-escaped).
std::string records_to_jsonl(const std::vector<SentenceRecord>& records);
std::vector<SentenceRecord> records_from_jsonl(std::string_view text);
std::string records_to_tsv(const std::vector<SentenceRecord>& records);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace propdetect
