#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "propdetect/corpus.hpp"
#include "propdetect/matrix.hpp"
#include "propdetect/providers.hpp"

namespace propdetect {

// Feature families, in their fixed block order.
enum class FeatureGroup { Rp, Sim, Stn, Dp, Sent, Doc, Emb };

inline constexpr std::array<FeatureGroup, 7> kAllGroups{
    FeatureGroup::Rp,   FeatureGroup::Sim, FeatureGroup::Stn, FeatureGroup::Dp,
    FeatureGroup::Sent, FeatureGroup::Doc, FeatureGroup::Emb};

std::string_view to_string(FeatureGroup group);
FeatureGroup parse_group(std::string_view text);
/// Parses a comma-separated list such as "rp,sim,stn". Duplicates are rejected.
std::vector<FeatureGroup> parse_groups(std::string_view list);

inline constexpr std::size_t kStanceDims = 10;
inline constexpr std::size_t kSentimentDims = 4;

struct FeatureColumn {
  std::string name;
  FeatureGroup group;

  bool operator==(const FeatureColumn&) const = default;
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  /// Columns for the chosen groups, laid out in canonical group order whatever the input
  /// order. `embedding_dim` is only used when Emb is selected.
  static FeatureSchema make(std::span<const FeatureGroup> groups, std::size_t embedding_dim = 0);
  /// The six interpretable groups, without embeddings (44 columns).
  static FeatureSchema interpretable();
  /// Rebuilds a schema from explicit columns, checking names are unique and groups contiguous
  /// in canonical order.
  static FeatureSchema from_columns(std::vector<FeatureColumn> columns);

  std::size_t size() const { return columns_.size(); }
  const std::vector<FeatureColumn>& columns() const { return columns_; }
  std::vector<std::string> names() const;
  std::vector<FeatureGroup> groups() const;
  bool has_group(FeatureGroup group) const;
  /// [begin, end) column range of a group; nullopt when absent.
  std::optional<std::pair<std::size_t, std::size_t>> range(FeatureGroup group) const;
  std::size_t embedding_dim() const;
  std::optional<std::size_t> index_of(std::string_view name) const;

  /// Hex digest of column names and groups.
  std::string fingerprint() const;

  std::string to_json() const;
  static FeatureSchema from_json(std::string_view text);

  bool operator==(const FeatureSchema&) const = default;

 private:
  std::vector<FeatureColumn> columns_;
};

/// i / n for 1-based i.
double relative_position(int index, int n);
/// u.v / (|u||v|); 0 when either vector has zero norm.
double cosine_similarity(std::span<const double> u, std::span<const double> v);
/// Probabilities (related, unrelated, agree, disagree, discuss) followed by the matching one-hot
/// labels; `related` is set iff the argmax base class is not unrelated.
std::array<double, kStanceDims> stance_features(const StanceDistribution& dist);
std::array<double, kNumSyntaxLabels> syntax_features(const SyntaxProfile& profile);
std::array<double, kSentimentDims> sentiment_features(const SentimentScores& scores);

struct FeatureVector {
  std::vector<double> values;
};

/// Feature vector of one sentence. For the title, similarity is 1 and stance is computed
/// against the title itself. Provider errors are rethrown with the sentence named.
FeatureVector assemble(const SentenceRecord& record, const Article& article, Providers& providers,
                       const FeatureSchema& schema);

/// Row identity carried next to the feature values.
struct RowKey {
  std::string article_id;
  int index = 1;
  int n = 1;
  TechniqueLabel label = TechniqueLabel::NonPropaganda;
  std::optional<Split> split;

  bool operator==(const RowKey&) const = default;
};

struct FeatureTable {
  FeatureSchema schema;
  std::vector<RowKey> keys;
  Matrix values;

  std::size_t rows() const { return keys.size(); }
  std::vector<TechniqueLabel> labels() const;
  /// Rows whose split is one of `splits`, in their original order.
  FeatureTable select(std::span<const Split> splits) const;
  FeatureTable select_rows(std::span<const std::size_t> rows) const;

  /// CSV with columns article_id,index,n,split,label followed by the schema names.
  std::string to_csv() const;
  static FeatureTable from_csv(std::string_view text, const FeatureSchema& schema);
  std::string to_jsonl() const;
};

/// Assembles all records, article by article, on `workers` threads. Output order follows
/// `records`. Every record must belong to one of `articles`.
FeatureTable assemble_table(const std::vector<Article>& articles,
                            const std::vector<SentenceRecord>& records, Providers& providers,
                            const FeatureSchema& schema, unsigned workers = 1);

/// Z-scores with population standard deviation. Zero-variance columns map to 0.
class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(std::vector<double> mean, std::vector<double> stddev);

  static Standardizer fit(const Matrix& train);

  bool fitted() const { return fitted_; }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return stddev_; }

  Matrix transform(const Matrix& x) const;
  std::vector<double> transform(std::span<const double> row) const;
  /// Zero-variance columns come back as the fitted mean.
  Matrix inverse_transform(const Matrix& z) const;

 private:
  void check(std::size_t cols) const;

  std::vector<double> mean_;
  std::vector<double> stddev_;
  bool fitted_ = false;
};

/// Removes every column of `group`. Throws ValidationError if the schema lacks it.
std::pair<Matrix, FeatureSchema> drop_group(const Matrix& matrix, const FeatureSchema& schema,
                                            FeatureGroup group);
FeatureTable drop_group(const FeatureTable& table, FeatureGroup group);

}  // namespace propdetect
