#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "propdetect/corpus.hpp"
#include "propdetect/features.hpp"
#include "propdetect/labels.hpp"
#include "propdetect/matrix.hpp"

namespace propdetect {

inline constexpr double kCovarianceThreshold = 0.001;

/// Covariance between a real column and a 0/1 indicator column:
///   p (1 - p) (E[f | t = 1] - E[f | t = 0]),  p = mean(t)
/// which equals the population covariance. Returns 0 when p is 0 or 1.
double mixed_covariance(std::span<const double> f, std::span<const int> t);

/// |cov| between every feature and the indicator of every technique.
struct CovarianceMatrix {
  std::vector<std::string> features;
  std::vector<FeatureGroup> groups;
  std::array<TechniqueLabel, kNumTechniques> techniques = all_techniques();
  std::array<std::size_t, kNumTechniques> counts{};
  Matrix values;  // features x techniques, absolute values
  double threshold = kCovarianceThreshold;

  /// Entry is shown: value >= threshold.
  bool passes(std::size_t feature, std::size_t technique) const {
    return values(feature, technique) >= threshold;
  }
  std::size_t technique_column(TechniqueLabel label) const;

  std::string to_json() const;
  static CovarianceMatrix from_json(std::string_view text);
};

/// Rows of `standardized` must be aligned with `labels`.
CovarianceMatrix covariance_matrix(const Matrix& standardized, const FeatureSchema& schema,
                                   std::span<const TechniqueLabel> labels,
                                   double threshold = kCovarianceThreshold);

/// Standardizes the table's values on its own rows, then computes the matrix.
CovarianceMatrix covariance_matrix(const FeatureTable& table,
                                   double threshold = kCovarianceThreshold);

BehaviorStats behavior_stats(const std::vector<SentenceRecord>& records);

std::string heatmap_csv(const CovarianceMatrix& cm);
std::string heatmap_svg(const CovarianceMatrix& cm);

/// Writes covariance.csv, covariance.svg and covariance.json into `out_dir`.
std::vector<std::filesystem::path> export_heatmap(const CovarianceMatrix& cm,
                                                  const std::filesystem::path& out_dir);

}  // namespace propdetect
