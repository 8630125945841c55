#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "addsep/errors.hpp"

namespace addsep {

using Vector = std::vector<double>;

/// A classification test set: one input vector per sample.
using TestSet = std::vector<Vector>;

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

enum class ActivationKind { Softplus };

inline std::string activation_name(ActivationKind k) {
  switch (k) {
    case ActivationKind::Softplus: return "softplus";
  }
  throw UnsupportedActivation("unknown activation kind");
}

inline ActivationKind activation_from_name(const std::string& name) {
  if (name == "softplus") return ActivationKind::Softplus;
  throw UnsupportedActivation("unknown activation name: " + name);
}

/// softplus(x) = log(exp(x) + 1), rewritten so large |x| cannot overflow:
/// x + log1p(exp(-x)) for x > 0 and log1p(exp(x)) otherwise.
inline double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// First derivative of softplus: the logistic sigmoid exp(x)/(exp(x)+1),
/// always in (0, 1).
inline double softplus_prime(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Second derivative of softplus: exp(x)/(exp(x)+1)^2, in (0, 0.25].
/// Evaluated through exp(-|x|) so both tails underflow cleanly to 0.
inline double softplus_double_prime(double x) {
  const double e = std::exp(-std::abs(x));
  const double d = 1.0 + e;
  return e / (d * d);
}

/// Third derivative, sigma''(x) * (1 - 2 sigma'(x)). Needed as the local
/// partial of a second-derivative node when a recorded backward sweep is
/// itself differentiated.
inline double softplus_triple_prime(double x) {
  return softplus_double_prime(x) * (1.0 - 2.0 * softplus_prime(x));
}

// ---------------------------------------------------------------------------
// Minimal dense matrix
// ---------------------------------------------------------------------------

/// Dense row-major matrix, just large enough to hold MLP layer weights.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionMismatch("matmul: " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " times " +
                            std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) {
        out(i, j) += aik * b(k, j);
      }
    }
  }
  return out;
}

inline Vector matvec(const Matrix& a, const Vector& v) {
  if (a.cols() != v.size()) {
    throw DimensionMismatch("matvec: " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " times vector of size " +
                            std::to_string(v.size()));
  }
  Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * v[j];
    out[i] = acc;
  }
  return out;
}

inline bool all_finite(const Vector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace addsep
