#pragma once

// Small dense matrices and LU factorization with partial pivoting. Used for
// the coarsest AMG level and for the per-cell blocks of BILU/BGS.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "msp/common.hpp"

namespace msp {

/// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(Index rows, Index cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  [[nodiscard]] static DenseMatrix identity(Index n) {
    DenseMatrix m(n, n);
    for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  [[nodiscard]] Index rows() const noexcept { return rows_; }
  [[nodiscard]] Index cols() const noexcept { return cols_; }
  [[nodiscard]] double& operator()(Index i, Index j) noexcept { return data_[i * cols_ + j]; }
  [[nodiscard]] double operator()(Index i, Index j) const noexcept { return data_[i * cols_ + j]; }
  [[nodiscard]] std::span<double> data() noexcept { return data_; }
  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

  [[nodiscard]] double max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<double> data_;
};

[[nodiscard]] inline DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("dense product: inner dimensions differ");
  DenseMatrix c(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (Index j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

[[nodiscard]] inline DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("dense difference: shapes differ");
  DenseMatrix c(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
  return c;
}

[[nodiscard]] inline std::vector<double> multiply(const DenseMatrix& a, std::span<const double> x) {
  if (x.size() != a.cols()) throw DimensionError("dense matvec: vector length differs from column count");
  std::vector<double> y(a.rows(), 0.0);
  for (Index i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (Index j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

/// LU factorization with partial (row) pivoting: P A = L U, unit-diagonal L.
class DenseFactorization {
 public:
  DenseFactorization() = default;

  /// Throws SingularMatrixError (location = elimination step) when the best
  /// available pivot is zero to working precision.
  explicit DenseFactorization(DenseMatrix a) : n_(a.rows()), lu_(std::move(a)), pivots_(n_) {
    if (lu_.rows() != lu_.cols()) throw DimensionError("LU factorization requires a square matrix");
    const double scale = lu_.max_abs();
    const double tiny = static_cast<double>(std::max<Index>(n_, 1)) * std::numeric_limits<double>::epsilon() * scale;
    for (Index k = 0; k < n_; ++k) {
      Index p = k;
      double best = std::abs(lu_(k, k));
      for (Index i = k + 1; i < n_; ++i) {
        if (std::abs(lu_(i, k)) > best) {
          best = std::abs(lu_(i, k));
          p = i;
        }
      }
      if (best == 0.0 || best <= tiny) throw SingularMatrixError("zero pivot in dense LU factorization", k);
      pivots_[k] = p;
      if (p != k)
        for (Index j = 0; j < n_; ++j) std::swap(lu_(k, j), lu_(p, j));
      const double inv = 1.0 / lu_(k, k);
      for (Index i = k + 1; i < n_; ++i) {
        const double l = lu_(i, k) * inv;
        lu_(i, k) = l;
        if (l == 0.0) continue;
        for (Index j = k + 1; j < n_; ++j) lu_(i, j) -= l * lu_(k, j);
      }
    }
  }

  [[nodiscard]] Index size() const noexcept { return n_; }
  [[nodiscard]] const DenseMatrix& factors() const noexcept { return lu_; }
  [[nodiscard]] std::span<const Index> pivots() const noexcept { return pivots_; }

  void solve_in_place(std::span<double> b) const {
    if (b.size() != n_) throw DimensionError("dense solve: right-hand side length differs from matrix size");
    for (Index k = 0; k < n_; ++k)
      if (pivots_[k] != k) std::swap(b[k], b[pivots_[k]]);
    for (Index i = 0; i < n_; ++i) {
      double s = b[i];
      for (Index j = 0; j < i; ++j) s -= lu_(i, j) * b[j];
      b[i] = s;
    }
    for (Index ii = n_; ii-- > 0;) {
      double s = b[ii];
      for (Index j = ii + 1; j < n_; ++j) s -= lu_(ii, j) * b[j];
      b[ii] = s / lu_(ii, ii);
    }
  }

  [[nodiscard]] std::vector<double> solve(std::span<const double> b) const {
    std::vector<double> x(b.begin(), b.end());
    solve_in_place(x);
    return x;
  }

  [[nodiscard]] DenseMatrix inverse() const {
    DenseMatrix inv(n_, n_);
    std::vector<double> col(n_);
    for (Index j = 0; j < n_; ++j) {
      std::fill(col.begin(), col.end(), 0.0);
      col[j] = 1.0;
      solve_in_place(col);
      for (Index i = 0; i < n_; ++i) inv(i, j) = col[i];
    }
    return inv;
  }

 private:
  Index n_ = 0;
  DenseMatrix lu_;
  std::vector<Index> pivots_;
};

}  // namespace msp
