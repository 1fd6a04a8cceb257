#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "propdetect/eval.hpp"
#include "propdetect/features.hpp"
#include "propdetect/labels.hpp"
#include "propdetect/matrix.hpp"
#include "propdetect/svm.hpp"

namespace propdetect {

enum class TaskMode { Binary, Multiclass };

std::string_view to_string(TaskMode mode);
TaskMode parse_mode(std::string_view text);

/// NonPropaganda -> 0, any technique -> 1.
std::vector<int> to_binary(std::span<const TechniqueLabel> labels);

struct TrainOptions {
  /// Scales C per class by n / (k * n_class). Off by default.
  bool balanced = false;
  SmoOptions smo;
};

/// Kernel SVM over integer class ids. Binary models (two classes) hold one machine whose
/// positive side is classes[1]; otherwise one machine per class, one-vs-rest.
struct TrainedModel {
  static constexpr int kVersion = 1;

  TaskMode mode = TaskMode::Binary;
  double gamma = 0.0;
  double C = 0.0;
  std::vector<int> classes;
  std::vector<BinarySvm> machines;
  Standardizer standardizer;  // unfitted when trained on pre-standardized input
  FeatureSchema schema;       // empty when trained on a bare matrix
  std::size_t n_features = 0;
  std::uint64_t seed = 0;

  std::string to_json() const;
  static TrainedModel from_json(std::string_view text);
};

/// `X` must already be standardized. Mode is Binary when y holds exactly two classes.
TrainedModel train_svm(const Matrix& x, std::span<const int> y, double gamma, double C,
                       const TrainOptions& options = {});

struct Prediction {
  int label = 0;
  /// One decision score per entry of model.classes. Binary: {-f, f}.
  std::vector<double> scores;
};

/// Applies the model to rows already in model space (standardized, matching columns).
std::vector<Prediction> predict(const TrainedModel& model, const Matrix& x);

/// Class ids used as SVM targets for a task.
std::vector<int> task_targets(std::span<const TechniqueLabel> labels, TaskMode mode);

/// Fits the standardizer on `train`, trains, and attaches the schema.
TrainedModel fit_model(const FeatureTable& train, TaskMode mode, double gamma, double C,
                       const TrainOptions& options = {}, std::uint64_t seed = 0);

/// Raw feature rows in; schema fingerprint must match the model's.
std::vector<Prediction> predict(const TrainedModel& model, const FeatureTable& table);
std::vector<int> predicted_labels(std::span<const Prediction> predictions);

/// Dev-set score for model selection: positive-class F1 (binary) or weighted F1 over the
/// 19 labels (multiclass).
AggregateMetrics task_scores(std::span<const int> y_true, std::span<const int> y_pred,
                             TaskMode mode);

struct Grid {
  std::vector<double> gammas{1e-3, 1e-4};
  std::vector<double> Cs{10.0, 100.0};

  static Grid from_json(std::string_view text);
};

struct ExperimentConfig {
  TaskMode mode = TaskMode::Binary;
  std::vector<FeatureGroup> groups{FeatureGroup::Rp,   FeatureGroup::Sim, FeatureGroup::Stn,
                                   FeatureGroup::Dp,   FeatureGroup::Sent, FeatureGroup::Doc};
  bool embedding = false;
  std::uint64_t seed = 13;
  Grid grid;
  bool balanced = false;
  /// Binary ablation only: score the sent row by doc-feature thresholding instead of retraining.
  bool sent_doc_rule = true;
  unsigned workers = 1;
};

struct GridPoint {
  double gamma = 0.0;
  double C = 0.0;
  AggregateMetrics dev;
};

struct GridResult {
  double gamma = 0.0;
  double C = 0.0;
  TrainedModel model;
  std::vector<GridPoint> table;  // in search order: C ascending, then gamma ascending
};

/// Trains one model per grid point on `train`, picks the best dev F1. Ties go to the smaller C,
/// then the smaller gamma.
GridResult grid_search(const FeatureTable& train, const FeatureTable& dev,
                       const ExperimentConfig& config);

struct AblationRow {
  std::string dropped;  // "none" for the base run, else the group name
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double gamma = 0.0;
  double C = 0.0;
  std::optional<double> doc_threshold;  // set on the doc-threshold sentiment row
};

/// Base run first, then one row per dropped group, each scored on `eval`. In binary mode the
/// sent row predicts propaganda wherever the doc feature reaches a threshold chosen on dev.
std::vector<AblationRow> run_ablation(const FeatureTable& train, const FeatureTable& dev,
                                      const FeatureTable& eval, const ExperimentConfig& config,
                                      std::span<const FeatureGroup> drops);

/// Threshold on `scores` maximizing F1 of (score >= t) against `y`; ties go to the smaller t.
double best_threshold(std::span<const double> scores, std::span<const int> y);

}  // namespace propdetect
