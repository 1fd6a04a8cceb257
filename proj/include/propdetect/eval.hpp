#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "propdetect/labels.hpp"

namespace propdetect {

/// Per-class scores as fractions in [0, 1]; tables print them x100.
struct ClassMetrics {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

/// Harmonic mean; 0 when p + r is 0.
double f1_score(double precision, double recall);

/// Precision, recall and F1 of class `cls`. Zero denominators give 0.
ClassMetrics prf(std::span<const int> y_true, std::span<const int> y_pred, int cls,
                 std::string name = {});

struct AggregateMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

/// Support-weighted mean of P, R and F1. Throws ValidationError on zero total support.
AggregateMetrics weighted_average(std::span<const ClassMetrics> metrics);

using ConfusionMatrix = std::vector<std::vector<std::size_t>>;

/// counts[true][pred] over classes 0..n_classes-1.
ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          std::size_t n_classes = kNumLabels);

std::vector<int> label_ids(std::span<const TechniqueLabel> labels);

/// One row per label (19 rows, table order), for the 19-way task.
std::vector<ClassMetrics> per_label_metrics(std::span<const TechniqueLabel> y_true,
                                            std::span<const TechniqueLabel> y_pred);

struct EvaluationResult {
  std::vector<ClassMetrics> per_class;
  AggregateMetrics weighted;
  ConfusionMatrix confusion;

  /// `{per_class: [...], weighted: {...}, confusion: [[...]]}`
  std::string to_json() const;
};

EvaluationResult evaluate_multiclass(std::span<const TechniqueLabel> y_true,
                                     std::span<const TechniqueLabel> y_pred);
/// Binary task: per_class holds non-propaganda and propaganda; `weighted` holds the
/// propaganda-class scores, the headline numbers for this task.
EvaluationResult evaluate_binary(std::span<const int> y_true, std::span<const int> y_pred);

/// A named P/R/F1 row, as in model comparison and ablation tables.
struct ScoreRow {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Table renderers. Numbers are percentages with two decimals.
std::string render_score_table_text(std::string_view title, std::string_view first_column,
                                    std::span<const ScoreRow> rows);
std::string render_score_table_csv(std::string_view first_column, std::span<const ScoreRow> rows);
/// Per-technique table: one row per class with support, then the weighted average row.
std::string render_class_table_text(std::span<const ClassMetrics> rows,
                                    const AggregateMetrics& weighted);
std::string render_class_table_csv(std::span<const ClassMetrics> rows,
                                   const AggregateMetrics& weighted);

}  // namespace propdetect
