#pragma once

// Compressed sparse row storage and the primitives every solver stage builds on.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msp/common.hpp"
#include "msp/dense.hpp"
#include "msp/parallel.hpp"

namespace msp {

struct Triplet {
  Index row;
  Index col;
  double value;
};

enum class DuplicatePolicy { Sum, Reject };

/// Scalar CSR matrix. Column indices are strictly increasing within each row.
/// The pattern is immutable after construction; values may be rescaled in
/// place through `values_mut()`.
class CsrMatrix {
 public:
  struct RowView {
    std::span<const Index> cols;
    std::span<const double> vals;
  };

  CsrMatrix() : row_offsets_(1, 0) {}

  CsrMatrix(Index nrows, Index ncols, std::vector<Index> row_offsets, std::vector<Index> col_indices,
            std::vector<double> values)
      : nrows_(nrows),
        ncols_(ncols),
        row_offsets_(std::move(row_offsets)),
        col_indices_(std::move(col_indices)),
        values_(std::move(values)) {
    validate();
  }

  [[nodiscard]] static CsrMatrix identity(Index n) {
    std::vector<Index> offsets(n + 1);
    std::iota(offsets.begin(), offsets.end(), Index{0});
    std::vector<Index> cols(n);
    std::iota(cols.begin(), cols.end(), Index{0});
    return CsrMatrix(n, n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0));
  }

  /// Assembles from unordered triplets. Entries whose final value is exactly
  /// zero are dropped unless `keep_zeros` is set.
  [[nodiscard]] static CsrMatrix from_triplets(Index nrows, Index ncols, std::vector<Triplet> entries,
                                               DuplicatePolicy duplicates = DuplicatePolicy::Sum,
                                               bool keep_zeros = false) {
    for (const auto& t : entries)
      if (t.row >= nrows || t.col >= ncols) throw DimensionError("triplet index out of range");
    // Stable: duplicates are summed in insertion order.
    std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<Index> offsets(nrows + 1, 0);
    std::vector<Index> cols;
    std::vector<double> vals;
    cols.reserve(entries.size());
    vals.reserve(entries.size());
    for (Index k = 0; k < entries.size();) {
      const Index r = entries[k].row;
      const Index c = entries[k].col;
      double v = entries[k].value;
      Index next = k + 1;
      for (; next < entries.size() && entries[next].row == r && entries[next].col == c; ++next) {
        if (duplicates == DuplicatePolicy::Reject)
          throw InvalidArgument("duplicate entry (" + std::to_string(r) + ", " + std::to_string(c) + ")");
        v += entries[next].value;
      }
      k = next;
      if (v == 0.0 && !keep_zeros) continue;
      cols.push_back(c);
      vals.push_back(v);
      ++offsets[r + 1];
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    return CsrMatrix(nrows, ncols, std::move(offsets), std::move(cols), std::move(vals));
  }

  [[nodiscard]] static CsrMatrix from_dense(const DenseMatrix& d) {
    std::vector<Triplet> t;
    for (Index i = 0; i < d.rows(); ++i)
      for (Index j = 0; j < d.cols(); ++j)
        if (d(i, j) != 0.0) t.push_back({i, j, d(i, j)});
    return from_triplets(d.rows(), d.cols(), std::move(t));
  }

  [[nodiscard]] Index nrows() const noexcept { return nrows_; }
  [[nodiscard]] Index ncols() const noexcept { return ncols_; }
  [[nodiscard]] Index nnz() const noexcept { return col_indices_.size(); }
  [[nodiscard]] bool is_square() const noexcept { return nrows_ == ncols_; }

  [[nodiscard]] std::span<const Index> row_offsets() const noexcept { return row_offsets_; }
  [[nodiscard]] std::span<const Index> col_indices() const noexcept { return col_indices_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::span<double> values_mut() noexcept { return values_; }

  [[nodiscard]] RowView row(Index i) const noexcept {
    const Index b = row_offsets_[i];
    const Index len = row_offsets_[i + 1] - b;
    return {std::span<const Index>(col_indices_).subspan(b, len), std::span<const double>(values_).subspan(b, len)};
  }

  /// Position of (i, j) in the value array, if stored.
  [[nodiscard]] std::optional<Index> find(Index i, Index j) const noexcept {
    const auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
    const auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return std::nullopt;
    return static_cast<Index>(it - col_indices_.begin());
  }

  [[nodiscard]] double at(Index i, Index j) const noexcept {
    const auto pos = find(i, j);
    return pos ? values_[*pos] : 0.0;
  }

  [[nodiscard]] std::vector<double> diagonal() const {
    std::vector<double> d(std::min(nrows_, ncols_), 0.0);
    for (Index i = 0; i < d.size(); ++i) d[i] = at(i, i);
    return d;
  }

  [[nodiscard]] bool same_pattern(const CsrMatrix& other) const noexcept {
    return nrows_ == other.nrows_ && ncols_ == other.ncols_ && row_offsets_ == other.row_offsets_ &&
           col_indices_ == other.col_indices_;
  }

  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;

 private:
  void validate() const {
    if (row_offsets_.size() != nrows_ + 1) throw InvalidArgument("row_offsets must have nrows+1 entries");
    if (row_offsets_.front() != 0) throw InvalidArgument("row_offsets[0] must be 0");
    if (row_offsets_.back() != col_indices_.size() || col_indices_.size() != values_.size())
      throw InvalidArgument("row_offsets[nrows], column count and value count disagree");
    for (Index i = 0; i < nrows_; ++i) {
      if (row_offsets_[i + 1] < row_offsets_[i]) throw InvalidArgument("row_offsets must be nondecreasing");
      for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
        if (col_indices_[k] >= ncols_) throw InvalidArgument("column index out of range");
        if (k > row_offsets_[i] && col_indices_[k] <= col_indices_[k - 1])
          throw InvalidArgument("column indices must be strictly increasing within a row");
      }
    }
  }

  Index nrows_ = 0;
  Index ncols_ = 0;
  std::vector<Index> row_offsets_;
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Products

/// y = A x. Each row is accumulated left to right by a single worker.
inline void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
  if (x.size() != a.ncols() || y.size() != a.nrows()) throw DimensionError("spmv: vector length mismatch");
  const auto offsets = a.row_offsets();
  const auto cols = a.col_indices();
  const auto vals = a.values();
  parallel::for_each_index(0, a.nrows(), [&](Index i) {
    double s = 0.0;
    for (Index k = offsets[i]; k < offsets[i + 1]; ++k) s += vals[k] * x[cols[k]];
    y[i] = s;
  });
}

[[nodiscard]] inline std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x) {
  std::vector<double> y(a.nrows());
  spmv(a, x, y);
  return y;
}

/// r = b - A x.
inline void residual(const CsrMatrix& a, std::span<const double> x, std::span<const double> b, std::span<double> r) {
  if (x.size() != a.ncols() || b.size() != a.nrows() || r.size() != a.nrows())
    throw DimensionError("residual: vector length mismatch");
  const auto offsets = a.row_offsets();
  const auto cols = a.col_indices();
  const auto vals = a.values();
  parallel::for_each_index(0, a.nrows(), [&](Index i) {
    double s = 0.0;
    for (Index k = offsets[i]; k < offsets[i + 1]; ++k) s += vals[k] * x[cols[k]];
    r[i] = b[i] - s;
  });
}

[[nodiscard]] inline double norm2(std::span<const double> v) noexcept {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

[[nodiscard]] inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (Index i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// ---------------------------------------------------------------------------
// Structural transforms

/// Aᵀ with values carried.
[[nodiscard]] inline CsrMatrix transpose_pattern(const CsrMatrix& a) {
  std::vector<Index> offsets(a.ncols() + 1, 0);
  for (Index c : a.col_indices()) ++offsets[c + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<Index> cols(a.nnz());
  std::vector<double> vals(a.nnz());
  std::vector<Index> cursor(offsets.begin(), offsets.end() - 1);
  for (Index i = 0; i < a.nrows(); ++i) {
    const auto r = a.row(i);
    for (Index k = 0; k < r.cols.size(); ++k) {
      const Index dst = cursor[r.cols[k]]++;
      cols[dst] = i;
      vals[dst] = r.vals[k];
    }
  }
  return CsrMatrix(a.ncols(), a.nrows(), std::move(offsets), std::move(cols), std::move(vals));
}

[[nodiscard]] inline bool is_permutation(std::span<const Index> perm) {
  std::vector<char> seen(perm.size(), 0);
  for (Index p : perm) {
    if (p >= perm.size() || seen[p]) return false;
    seen[p] = 1;
  }
  return true;
}

[[nodiscard]] inline std::vector<Index> inverse_permutation(std::span<const Index> perm) {
  if (!is_permutation(perm)) throw InvalidArgument("not a permutation");
  std::vector<Index> inv(perm.size());
  for (Index i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  return inv;
}

/// Symmetric renumbering: entry (i, j) of A moves to (perm[i], perm[j]).
[[nodiscard]] inline CsrMatrix permute(const CsrMatrix& a, std::span<const Index> perm) {
  if (!a.is_square()) throw DimensionError("permute requires a square matrix");
  if (perm.size() != a.nrows()) throw DimensionError("permutation length differs from matrix size");
  const auto inv = inverse_permutation(perm);
  std::vector<Index> offsets(a.nrows() + 1, 0);
  for (Index new_row = 0; new_row < a.nrows(); ++new_row)
    offsets[new_row + 1] = offsets[new_row] + a.row(inv[new_row]).cols.size();
  std::vector<Index> cols(a.nnz());
  std::vector<double> vals(a.nnz());
  std::vector<std::pair<Index, double>> scratch;
  for (Index new_row = 0; new_row < a.nrows(); ++new_row) {
    const auto r = a.row(inv[new_row]);
    scratch.clear();
    for (Index k = 0; k < r.cols.size(); ++k) scratch.emplace_back(perm[r.cols[k]], r.vals[k]);
    std::sort(scratch.begin(), scratch.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (Index k = 0; k < scratch.size(); ++k) {
      cols[offsets[new_row] + k] = scratch[k].first;
      vals[offsets[new_row] + k] = scratch[k].second;
    }
  }
  return CsrMatrix(a.nrows(), a.ncols(), std::move(offsets), std::move(cols), std::move(vals));
}

/// y[perm[i]] = x[i].
[[nodiscard]] inline std::vector<double> permute_vector(std::span<const double> x, std::span<const Index> perm) {
  if (x.size() != perm.size()) throw DimensionError("permutation length differs from vector length");
  if (!is_permutation(perm)) throw InvalidArgument("not a permutation");
  std::vector<double> y(x.size());
  for (Index i = 0; i < x.size(); ++i) y[perm[i]] = x[i];
  return y;
}

/// Rows `rows` and columns `cols` of A, renumbered by their position in the lists.
[[nodiscard]] inline CsrMatrix extract_submatrix(const CsrMatrix& a, std::span<const Index> rows,
                                                 std::span<const Index> cols) {
  constexpr Index absent = static_cast<Index>(-1);
  std::vector<Index> col_map(a.ncols(), absent);
  for (Index k = 0; k < cols.size(); ++k) {
    if (cols[k] >= a.ncols()) throw DimensionError("column selection out of range");
    col_map[cols[k]] = k;
  }
  std::vector<Index> offsets(rows.size() + 1, 0);
  std::vector<Index> out_cols;
  std::vector<double> out_vals;
  std::vector<std::pair<Index, double>> scratch;
  for (Index k = 0; k < rows.size(); ++k) {
    if (rows[k] >= a.nrows()) throw DimensionError("row selection out of range");
    const auto r = a.row(rows[k]);
    scratch.clear();
    for (Index e = 0; e < r.cols.size(); ++e)
      if (col_map[r.cols[e]] != absent) scratch.emplace_back(col_map[r.cols[e]], r.vals[e]);
    std::sort(scratch.begin(), scratch.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (const auto& [c, v] : scratch) {
      out_cols.push_back(c);
      out_vals.push_back(v);
    }
    offsets[k + 1] = out_cols.size();
  }
  return CsrMatrix(rows.size(), cols.size(), std::move(offsets), std::move(out_cols), std::move(out_vals));
}

[[nodiscard]] inline DenseMatrix to_dense(const CsrMatrix& a) {
  DenseMatrix d(a.nrows(), a.ncols());
  for (Index i = 0; i < a.nrows(); ++i) {
    const auto r = a.row(i);
    for (Index k = 0; k < r.cols.size(); ++k) d(i, r.cols[k]) = r.vals[k];
  }
  return d;
}

/// LU of the densified matrix; intended for the coarsest multigrid level.
[[nodiscard]] inline DenseFactorization dense_factorize(const CsrMatrix& a) {
  if (!a.is_square()) throw DimensionError("dense_factorize requires a square matrix");
  return DenseFactorization(to_dense(a));
}

[[nodiscard]] inline std::vector<double> dense_solve(const DenseFactorization& f, std::span<const double> b) {
  return f.solve(b);
}

// ---------------------------------------------------------------------------
// Cell-blocked layouts

enum class BlockOrdering { CellInterleaved, VariableSegregated };

/// Describes how `ncells * block_size` unknowns are laid out. Local variable 0
/// of every cell is the pressure.
struct BlockLayout {
  Index ncells = 0;
  Index block_size = 1;
  BlockOrdering ordering = BlockOrdering::CellInterleaved;

  [[nodiscard]] Index size() const noexcept { return ncells * block_size; }

  /// Global index of (cell, local variable).
  [[nodiscard]] Index index(Index cell, Index var) const noexcept {
    return ordering == BlockOrdering::CellInterleaved ? cell * block_size + var : var * ncells + cell;
  }

  friend bool operator==(const BlockLayout&, const BlockLayout&) = default;
};

/// Permutation mapping positions in `layout` to the cell-interleaved positions.
[[nodiscard]] inline std::vector<Index> to_interleaved_permutation(const BlockLayout& layout) {
  std::vector<Index> perm(layout.size());
  for (Index c = 0; c < layout.ncells; ++c)
    for (Index v = 0; v < layout.block_size; ++v) perm[layout.index(c, v)] = c * layout.block_size + v;
  return perm;
}

}  // namespace msp
