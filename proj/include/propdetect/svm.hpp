#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "propdetect/matrix.hpp"

namespace propdetect {

/// exp(-gamma * |x - z|^2)
double rbf_kernel(std::span<const double> x, std::span<const double> z, double gamma);

/// Kernel matrix of the rows of `x`.
Matrix rbf_kernel_matrix(const Matrix& x, double gamma);

struct SmoOptions {
  /// Stop once the maximal KKT violation (the libsvm m(a) - M(a) gap) is below this.
  double tolerance = 1e-3;
  /// 0 picks max(10'000'000, 100 n).
  std::size_t max_iterations = 0;
  /// Kernel row cache budget.
  std::size_t cache_bytes = std::size_t{256} << 20;
};

/// Two-class kernel machine: f(x) = sum_i coef_i K(sv_i, x) + bias, coef_i = alpha_i y_i.
struct BinarySvm {
  Matrix support_vectors;
  std::vector<double> coef;
  double bias = 0.0;

  double decision(std::span<const double> x, double gamma) const;
};

struct SmoResult {
  BinarySvm machine;
  std::vector<double> alpha;  // one per training row
  std::size_t iterations = 0;
  bool converged = false;
  double kkt_gap = 0.0;
};

/// Solves the soft-margin dual
///   min_a 1/2 a'Qa - e'a,  Q_ij = y_i y_j K(x_i, x_j),  0 <= a_i <= C_i,  y'a = 0
/// with sequential minimal optimization and second-order working set selection.
/// `y` holds +1/-1; `c` holds the per-row box bound C_i.
SmoResult solve_smo(const Matrix& x, std::span<const int> y, std::span<const double> c,
                    double gamma, const SmoOptions& options = {});

/// Largest KKT violation of a dual solution, using the same gap measure as the solver.
double kkt_gap(const Matrix& x, std::span<const int> y, std::span<const double> c,
               std::span<const double> alpha, double gamma);

}  // namespace propdetect
