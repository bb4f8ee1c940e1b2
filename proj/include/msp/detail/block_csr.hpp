#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msp/dense.hpp"
#include "msp/sparse.hpp"

namespace msp::detail {

/// Cell-blocked copy of a cell-interleaved CSR matrix: dense bs×bs blocks
/// (row-major) on the block pattern, block columns sorted within each block row.
struct BlockCsr {
  Index nblocks = 0;
  Index bs = 1;
  std::vector<Index> row_offsets;
  std::vector<Index> cols;
  std::vector<Index> diag;  // position of the diagonal block in each block row
  std::vector<double> blocks;

  [[nodiscard]] std::span<double> block(Index pos) noexcept {
    return std::span<double>(blocks).subspan(pos * bs * bs, bs * bs);
  }
  [[nodiscard]] std::span<const double> block(Index pos) const noexcept {
    return std::span<const double>(blocks).subspan(pos * bs * bs, bs * bs);
  }

  [[nodiscard]] std::optional<Index> find(Index bi, Index bj) const noexcept {
    for (Index k = row_offsets[bi]; k < row_offsets[bi + 1]; ++k)
      if (cols[k] == bj) return k;
    return std::nullopt;
  }

  /// Requires a square matrix whose size is a multiple of `block_size`.
  static BlockCsr from_interleaved(const CsrMatrix& a, Index block_size) {
    if (!a.is_square()) throw DimensionError("block matrix must be square");
    if (block_size == 0 || a.nrows() % block_size != 0)
      throw DimensionError("matrix size is not a multiple of the block size");
    BlockCsr m;
    m.bs = block_size;
    m.nblocks = a.nrows() / block_size;
    m.row_offsets.assign(m.nblocks + 1, 0);
    std::vector<Index> marker(m.nblocks, static_cast<Index>(-1));
    std::vector<Index> row_cols;
    for (Index bi = 0; bi < m.nblocks; ++bi) {
      row_cols.clear();
      marker[bi] = bi;
      row_cols.push_back(bi);
      for (Index r = bi * block_size; r < (bi + 1) * block_size; ++r)
        for (Index c : a.row(r).cols) {
          const Index bj = c / block_size;
          if (marker[bj] != bi) {
            marker[bj] = bi;
            row_cols.push_back(bj);
          }
        }
      std::sort(row_cols.begin(), row_cols.end());
      m.cols.insert(m.cols.end(), row_cols.begin(), row_cols.end());
      m.row_offsets[bi + 1] = m.cols.size();
    }
    m.diag.resize(m.nblocks);
    m.blocks.assign(m.cols.size() * block_size * block_size, 0.0);
    for (Index bi = 0; bi < m.nblocks; ++bi) {
      m.diag[bi] = *m.find(bi, bi);
      for (Index r = bi * block_size; r < (bi + 1) * block_size; ++r) {
        const auto row = a.row(r);
        for (Index k = 0; k < row.cols.size(); ++k) {
          const Index bj = row.cols[k] / block_size;
          const Index pos = *m.find(bi, bj);
          m.block(pos)[(r % block_size) * block_size + row.cols[k] % block_size] = row.vals[k];
        }
      }
    }
    return m;
  }
};

inline DenseMatrix to_dense_block(std::span<const double> block, Index bs) {
  DenseMatrix d(bs, bs);
  std::copy(block.begin(), block.end(), d.data().begin());
  return d;
}

/// y -= B x for a row-major bs×bs block.
inline void block_gemv_sub(std::span<const double> block, Index bs, std::span<const double> x, std::span<double> y) {
  for (Index i = 0; i < bs; ++i) {
    double s = 0.0;
    for (Index j = 0; j < bs; ++j) s += block[i * bs + j] * x[j];
    y[i] -= s;
  }
}

/// C -= A B for row-major bs×bs blocks.
inline void block_gemm_sub(std::span<const double> a, std::span<const double> b, Index bs, std::span<double> c) {
  for (Index i = 0; i < bs; ++i)
    for (Index k = 0; k < bs; ++k) {
      const double aik = a[i * bs + k];
      if (aik == 0.0) continue;
      for (Index j = 0; j < bs; ++j) c[i * bs + j] -= aik * b[k * bs + j];
    }
}

/// Returns A B for row-major bs×bs blocks.
inline std::vector<double> block_gemm(std::span<const double> a, std::span<const double> b, Index bs) {
  std::vector<double> c(bs * bs, 0.0);
  for (Index i = 0; i < bs; ++i)
    for (Index k = 0; k < bs; ++k) {
      const double aik = a[i * bs + k];
      for (Index j = 0; j < bs; ++j) c[i * bs + j] += aik * b[k * bs + j];
    }
  return c;
}

}  // namespace msp::detail
