#include "propdetect/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>

#include "propdetect/errors.hpp"

namespace propdetect {
namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Rows of the kernel matrix computed on demand, least recently used rows evicted first.
class KernelCache {
 public:
  KernelCache(const Matrix& x, double gamma, std::size_t budget_bytes)
      : x_(x), gamma_(gamma), sq_norms_(x.rows()) {
    for (std::size_t i = 0; i < x.rows(); ++i) sq_norms_[i] = dot(x.row(i), x.row(i));
    const std::size_t row_bytes = std::max<std::size_t>(1, x.rows() * sizeof(double));
    capacity_ = std::max<std::size_t>(2, budget_bytes / row_bytes);
  }

  const std::vector<double>& row(std::size_t i) {
    if (auto it = index_.find(i); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second;
    }
    if (lru_.size() >= capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    std::vector<double> values(x_.rows());
    const auto xi = x_.row(i);
    for (std::size_t j = 0; j < x_.rows(); ++j) {
      const double d2 = std::max(0.0, sq_norms_[i] + sq_norms_[j] - 2.0 * dot(xi, x_.row(j)));
      values[j] = std::exp(-gamma_ * d2);
    }
    values[i] = 1.0;
    lru_.emplace_front(i, std::move(values));
    index_[i] = lru_.begin();
    return lru_.front().second;
  }

 private:
  const Matrix& x_;
  double gamma_;
  std::vector<double> sq_norms_;
  std::size_t capacity_;
  std::list<std::pair<std::size_t, std::vector<double>>> lru_;
  std::unordered_map<std::size_t,
                     std::list<std::pair<std::size_t, std::vector<double>>>::iterator>
      index_;
};

// libsvm index sets: I_up allows increasing y_t a_t, I_low allows decreasing it.
bool in_up(int y, double a, double c) { return y > 0 ? a < c : a > 0.0; }
bool in_low(int y, double a, double c) { return y > 0 ? a > 0.0 : a < c; }

// Returns max over I_up of -y G and max over I_low of y G; their sum is the KKT gap.
std::pair<double, double> gap_terms(std::span<const int> y, std::span<const double> c,
                                    std::span<const double> alpha, std::span<const double> grad) {
  double gmax = -kInf;
  double gmax2 = -kInf;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (in_up(y[t], alpha[t], c[t])) gmax = std::max(gmax, -y[t] * grad[t]);
    if (in_low(y[t], alpha[t], c[t])) gmax2 = std::max(gmax2, y[t] * grad[t]);
  }
  return {gmax, gmax2};
}

double compute_bias(std::span<const int> y, std::span<const double> c,
                    std::span<const double> alpha, std::span<const double> grad) {
  double ub = kInf;
  double lb = -kInf;
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double yg = y[i] * grad[i];
    const bool at_upper = alpha[i] >= c[i];
    const bool at_lower = alpha[i] <= 0.0;
    if (at_upper) {
      if (y[i] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (at_lower) {
      if (y[i] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  return -rho;
}

void validate_inputs(const Matrix& x, std::span<const int> y, std::span<const double> c,
                     double gamma) {
  if (x.rows() != y.size() || y.size() != c.size()) {
    throw ValidationError("SVM inputs have mismatched lengths");
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("gamma must be positive");
  bool pos = false;
  bool neg = false;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 1) pos = true;
    else if (y[i] == -1) neg = true;
    else throw ValidationError("binary SVM targets must be +1 or -1");
    if (!(c[i] > 0.0) || !std::isfinite(c[i])) throw ValidationError("C must be positive");
  }
  if (!pos || !neg) throw ValidationError("SVM training needs both classes present");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw ValidationError("SVM training data contains non-finite values");
  }
}

}  // namespace

double rbf_kernel(std::span<const double> x, std::span<const double> z, double gamma) {
  if (x.size() != z.size()) throw ValidationError("kernel arguments differ in dimension");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - z[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

Matrix rbf_kernel_matrix(const Matrix& x, double gamma) {
  Matrix k(x.rows(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    k(i, i) = 1.0;
    for (std::size_t j = i + 1; j < x.rows(); ++j) {
      k(i, j) = k(j, i) = rbf_kernel(x.row(i), x.row(j), gamma);
    }
  }
  return k;
}

double BinarySvm::decision(std::span<const double> x, double gamma) const {
  double f = bias;
  for (std::size_t i = 0; i < coef.size(); ++i) {
    f += coef[i] * rbf_kernel(support_vectors.row(i), x, gamma);
  }
  return f;
}

SmoResult solve_smo(const Matrix& x, std::span<const int> y, std::span<const double> c,
                    double gamma, const SmoOptions& options) {
  validate_inputs(x, y, c, gamma);
  const std::size_t n = x.rows();
  const std::size_t max_iter =
      options.max_iterations > 0 ? options.max_iterations : std::max<std::size_t>(10'000'000, 100 * n);

  KernelCache cache(x, gamma, options.cache_bytes);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of the dual objective, Q a - e

  SmoResult result;
  while (true) {
    // Working set selection, second order (Fan, Chen and Lin).
    double gmax = -kInf;
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(y[t], alpha[t], c[t]) && -y[t] * grad[t] >= gmax) {
        gmax = -y[t] * grad[t];
        i = t;
      }
    }
    if (i == n) {
      result.converged = true;
      break;
    }
    const auto& ki = cache.row(i);
    double gmax2 = -kInf;
    double best_obj = kInf;
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(y[t], alpha[t], c[t])) continue;
      const double yg = y[t] * grad[t];
      gmax2 = std::max(gmax2, yg);
      const double b = gmax + yg;
      if (b <= 0.0) continue;
      double a = 2.0 - 2.0 * ki[t];  // K_ii + K_tt - 2 K_it with unit diagonal
      if (a <= 0.0) a = kTau;
      const double obj = -(b * b) / a;
      if (obj <= best_obj) {
        best_obj = obj;
        j = t;
      }
    }
    result.kkt_gap = gmax + gmax2;
    if (result.kkt_gap < options.tolerance || j == n) {
      result.converged = true;
      break;
    }
    if (result.iterations >= max_iter) break;
    ++result.iterations;

    const auto& kj = cache.row(j);
    const double kij = ki[j];
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    const double ci = c[i];
    const double cj = c[j];
    // Two-variable subproblem, clipped to the box (libsvm update rules).
    if (y[i] != y[j]) {
      double quad = 2.0 + 2.0 * (-kij);
      if (quad <= 0.0) quad = kTau;
      // Q_ij = y_i y_j K_ij = -K_ij here.
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > ci - cj) {
        if (alpha[i] > ci) {
          alpha[i] = ci;
          alpha[j] = ci - diff;
        }
      } else if (alpha[j] > cj) {
        alpha[j] = cj;
        alpha[i] = cj + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * kij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > ci) {
        if (alpha[i] > ci) {
          alpha[i] = ci;
          alpha[j] = sum - ci;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > cj) {
        if (alpha[j] > cj) {
          alpha[j] = cj;
          alpha[i] = sum - cj;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }

    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
    }
  }

  const auto [gmax, gmax2] = gap_terms(y, c, alpha, grad);
  result.kkt_gap = gmax + gmax2;
  result.machine.bias = compute_bias(y, c, alpha, grad);
  std::vector<std::size_t> support;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) support.push_back(t);
  }
  result.machine.support_vectors = x.select_rows(support);
  for (auto t : support) result.machine.coef.push_back(alpha[t] * y[t]);
  result.alpha = std::move(alpha);
  return result;
}

double kkt_gap(const Matrix& x, std::span<const int> y, std::span<const double> c,
               std::span<const double> alpha, double gamma) {
  const std::size_t n = x.rows();
  std::vector<double> grad(n, -1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] == 0.0) continue;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * y[i] * rbf_kernel(x.row(i), x.row(t), gamma) * alpha[i];
    }
  }
  const auto [gmax, gmax2] = gap_terms(y, c, alpha, grad);
  return gmax + gmax2;
}

}  // namespace propdetect
