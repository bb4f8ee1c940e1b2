#pragma once

// Relaxation methods: point Jacobi, ordered Gauss-Seidel, multi-color
// parallel Gauss-Seidel, block Gauss-Seidel and block ILU(0).

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msp/coloring.hpp"
#include "msp/detail/block_csr.hpp"
#include "msp/parallel.hpp"
#include "msp/sparse.hpp"

namespace msp {

enum class SmootherKind {
  Jacobi,
  GsNaturalOrder,
  PgsMultiColor,
  GsColorOrder,  // sequential GS visiting rows in coloring order; reference for PgsMultiColor
};

[[nodiscard]] inline std::string to_string(SmootherKind kind) {
  switch (kind) {
    case SmootherKind::Jacobi: return "jacobi";
    case SmootherKind::GsNaturalOrder: return "gs";
    case SmootherKind::PgsMultiColor: return "pgs-mc";
    case SmootherKind::GsColorOrder: return "gs-color";
  }
  return "unknown";
}

[[nodiscard]] inline SmootherKind parse_smoother_kind(const std::string& name) {
  if (name == "jacobi") return SmootherKind::Jacobi;
  if (name == "gs") return SmootherKind::GsNaturalOrder;
  if (name == "pgs-mc") return SmootherKind::PgsMultiColor;
  if (name == "gs-color") return SmootherKind::GsColorOrder;
  throw InvalidArgument("unknown smoother '" + name + "'");
}

struct SmootherConfig {
  SmootherKind kind = SmootherKind::PgsMultiColor;
  Index sweeps = 1;
  std::optional<ColoringPlan> plan;  // computed from the matrix when absent
  double jacobi_weight = 1.0;
};

enum class SweepDirection { Forward, Backward };

namespace detail {

inline std::vector<double> checked_diagonal(const CsrMatrix& a) {
  if (!a.is_square()) throw DimensionError("relaxation requires a square matrix");
  auto d = a.diagonal();
  for (Index i = 0; i < d.size(); ++i)
    if (d[i] == 0.0) throw SingularMatrixError("zero diagonal entry at row " + std::to_string(i), i);
  return d;
}

inline void check_vectors(const CsrMatrix& a, std::span<const double> x, std::span<const double> b) {
  if (x.size() != a.nrows() || b.size() != a.nrows()) throw DimensionError("relaxation: vector length mismatch");
}

/// x_i <- (b_i - sum_{j != i} a_ij x_j) / a_ii using the current contents of x.
inline void relax_row(const CsrMatrix& a, std::span<const double> diag, std::span<double> x,
                      std::span<const double> b, Index i) noexcept {
  const auto r = a.row(i);
  double s = b[i];
  for (Index k = 0; k < r.cols.size(); ++k) {
    const Index j = r.cols[k];
    if (j == i || r.vals[k] == 0.0) continue;
    s -= r.vals[k] * x[j];
  }
  x[i] = s / diag[i];
}

inline void gs_ordered_kernel(const CsrMatrix& a, std::span<const double> diag, std::span<double> x,
                              std::span<const double> b, std::span<const Index> order, SweepDirection dir) {
  if (dir == SweepDirection::Forward) {
    for (Index i : order) relax_row(a, diag, x, b, i);
  } else {
    for (Index k = order.size(); k-- > 0;) relax_row(a, diag, x, b, order[k]);
  }
}

/// Groups are visited in order (or reverse order); rows of one group are
/// independent and may be relaxed concurrently.
inline void pgs_mc_kernel(const CsrMatrix& a, std::span<const double> diag, std::span<double> x,
                          std::span<const double> b, const ColoringPlan& plan, SweepDirection dir) {
  const Index g = plan.num_groups();
  for (Index step = 0; step < g; ++step) {
    const auto& group = plan.groups[dir == SweepDirection::Forward ? step : g - 1 - step];
    parallel::for_each_index(0, group.size(), [&](Index k) { relax_row(a, diag, x, b, group[k]); });
  }
}

inline void jacobi_kernel(const CsrMatrix& a, std::span<const double> diag, std::span<double> x,
                          std::span<const double> b, double weight, std::vector<double>& scratch) {
  scratch.resize(x.size());
  const std::span<const double> old(x);
  parallel::for_each_index(0, a.nrows(), [&](Index i) {
    const auto r = a.row(i);
    double s = b[i];
    for (Index k = 0; k < r.cols.size(); ++k)
      if (r.cols[k] != i) s -= r.vals[k] * old[r.cols[k]];
    scratch[i] = weight == 1.0 ? s / diag[i] : (1.0 - weight) * old[i] + weight * s / diag[i];
  });
  std::copy(scratch.begin(), scratch.end(), x.begin());
}

}  // namespace detail

/// `sweeps` damped Jacobi sweeps; every update uses previous-sweep values only.
inline void jacobi_sweep(const CsrMatrix& a, std::span<double> x, std::span<const double> b, Index sweeps,
                         double weight = 1.0) {
  detail::check_vectors(a, x, b);
  const auto diag = detail::checked_diagonal(a);
  std::vector<double> scratch;
  for (Index s = 0; s < sweeps; ++s) detail::jacobi_kernel(a, diag, x, b, weight, scratch);
}

/// In-place Gauss-Seidel visiting rows in `order`.
inline void gs_sweep_ordered(const CsrMatrix& a, std::span<double> x, std::span<const double> b,
                             std::span<const Index> order, Index sweeps) {
  detail::check_vectors(a, x, b);
  if (order.size() != a.nrows() || !is_permutation(order))
    throw InvalidArgument("Gauss-Seidel order must be a permutation of the rows");
  const auto diag = detail::checked_diagonal(a);
  for (Index s = 0; s < sweeps; ++s) detail::gs_ordered_kernel(a, diag, x, b, order, SweepDirection::Forward);
}

/// Multi-color parallel Gauss-Seidel. Produces exactly the iterates of
/// gs_sweep_ordered with order = plan.color_order(), at any thread count.
inline void pgs_mc_sweep(const CsrMatrix& a, std::span<double> x, std::span<const double> b,
                         const ColoringPlan& plan, Index sweeps) {
  detail::check_vectors(a, x, b);
  if (const auto report = validate_plan(plan, build_adjacency(a)); !report.ok())
    throw InvalidArgument("coloring plan is invalid for this matrix: " + report.message);
  const auto diag = detail::checked_diagonal(a);
  for (Index s = 0; s < sweeps; ++s) detail::pgs_mc_kernel(a, diag, x, b, plan, SweepDirection::Forward);
}

/// A point smoother bound to one matrix. Setup (diagonal, coloring, plan
/// validation) happens once; `smooth` only relaxes.
class PointSmoother {
 public:
  PointSmoother() = default;

  PointSmoother(const CsrMatrix& a, SmootherConfig config) : config_(std::move(config)) {
    if (config_.sweeps < 1) throw InvalidArgument("smoother sweeps must be >= 1");
    diag_ = detail::checked_diagonal(a);
    switch (config_.kind) {
      case SmootherKind::Jacobi: break;
      case SmootherKind::GsNaturalOrder:
        order_.resize(a.nrows());
        for (Index i = 0; i < a.nrows(); ++i) order_[i] = i;
        break;
      case SmootherKind::PgsMultiColor:
      case SmootherKind::GsColorOrder: {
        const auto graph = build_adjacency(a);
        if (!config_.plan) config_.plan = vertices_grouping(graph);
        if (const auto report = validate_plan(*config_.plan, graph); !report.ok())
          throw InvalidArgument("coloring plan is invalid for this matrix: " + report.message);
        order_ = config_.plan->color_order();
        break;
      }
    }
  }

  [[nodiscard]] const SmootherConfig& config() const noexcept { return config_; }
  [[nodiscard]] const std::optional<ColoringPlan>& plan() const noexcept { return config_.plan; }

  /// `config().sweeps` sweeps on A x = b. Backward reverses the visiting order
  /// (group order for the multi-color variant); Jacobi ignores it.
  void smooth(const CsrMatrix& a, std::span<double> x, std::span<const double> b,
              SweepDirection dir = SweepDirection::Forward) const {
    std::vector<double> scratch;
    for (Index s = 0; s < config_.sweeps; ++s) {
      switch (config_.kind) {
        case SmootherKind::Jacobi: detail::jacobi_kernel(a, diag_, x, b, config_.jacobi_weight, scratch); break;
        case SmootherKind::GsNaturalOrder:
        case SmootherKind::GsColorOrder: detail::gs_ordered_kernel(a, diag_, x, b, order_, dir); break;
        case SmootherKind::PgsMultiColor: detail::pgs_mc_kernel(a, diag_, x, b, *config_.plan, dir); break;
      }
    }
  }

 private:
  SmootherConfig config_;
  std::vector<double> diag_;
  std::vector<Index> order_;
};

namespace detail {

/// Maps between a layout and its cell-interleaved numbering.
class InterleavedView {
 public:
  InterleavedView() = default;
  explicit InterleavedView(const BlockLayout& layout) {
    if (layout.ordering != BlockOrdering::CellInterleaved) perm_ = to_interleaved_permutation(layout);
  }
  [[nodiscard]] bool identity() const noexcept { return perm_.empty(); }
  [[nodiscard]] CsrMatrix matrix(const CsrMatrix& a) const { return identity() ? a : permute(a, perm_); }
  void to_interleaved(std::span<const double> in, std::span<double> out) const {
    if (identity()) std::copy(in.begin(), in.end(), out.begin());
    else
      for (Index i = 0; i < in.size(); ++i) out[perm_[i]] = in[i];
  }
  void from_interleaved(std::span<const double> in, std::span<double> out) const {
    if (identity()) std::copy(in.begin(), in.end(), out.begin());
    else
      for (Index i = 0; i < out.size(); ++i) out[i] = in[perm_[i]];
  }

 private:
  std::vector<Index> perm_;
};

inline void check_layout(const CsrMatrix& a, const BlockLayout& layout) {
  if (!a.is_square() || a.nrows() != layout.size() || layout.block_size == 0)
    throw DimensionError("matrix size does not match block layout");
}

}  // namespace detail

/// Block ILU(0): incomplete LU on the cell-block pattern without fill.
class BlockIluFactorization {
 public:
  BlockIluFactorization() = default;

  BlockIluFactorization(const CsrMatrix& a, const BlockLayout& layout) : layout_(layout), view_(layout) {
    detail::check_layout(a, layout);
    lu_ = detail::BlockCsr::from_interleaved(view_.matrix(a), layout.block_size);
    const Index bs = lu_.bs;
    dinv_.assign(lu_.nblocks * bs * bs, 0.0);
    std::vector<Index> position(lu_.nblocks, static_cast<Index>(-1));
    for (Index i = 0; i < lu_.nblocks; ++i) {
      for (Index p = lu_.row_offsets[i]; p < lu_.row_offsets[i + 1]; ++p) position[lu_.cols[p]] = p;
      for (Index p = lu_.row_offsets[i]; p < lu_.diag[i]; ++p) {
        const Index k = lu_.cols[p];
        const auto lik = detail::block_gemm(lu_.block(p), dinv_block(k), bs);
        std::copy(lik.begin(), lik.end(), lu_.block(p).begin());
        for (Index q = lu_.diag[k] + 1; q < lu_.row_offsets[k + 1]; ++q) {
          const Index target = position[lu_.cols[q]];
          if (target == static_cast<Index>(-1)) continue;
          detail::block_gemm_sub(lu_.block(p), lu_.block(q), bs, lu_.block(target));
        }
      }
      try {
        const DenseFactorization pivot(detail::to_dense_block(lu_.block(lu_.diag[i]), bs));
        const auto inv = pivot.inverse();
        std::copy(inv.data().begin(), inv.data().end(), dinv_.begin() + static_cast<std::ptrdiff_t>(i * bs * bs));
      } catch (const SingularMatrixError&) {
        throw SingularMatrixError("BILU(0): singular pivot block at cell " + std::to_string(i), i);
      }
      for (Index p = lu_.row_offsets[i]; p < lu_.row_offsets[i + 1]; ++p) position[lu_.cols[p]] = static_cast<Index>(-1);
    }
  }

  [[nodiscard]] const BlockLayout& layout() const noexcept { return layout_; }

  /// w = (LU)⁻¹ r.
  void apply(std::span<const double> r, std::span<double> w) const {
    if (r.size() != layout_.size() || w.size() != layout_.size()) throw DimensionError("BILU(0) apply: length mismatch");
    const Index bs = lu_.bs;
    std::vector<double> y(r.size());
    view_.to_interleaved(r, y);
    std::vector<double> t(bs);
    for (Index i = 0; i < lu_.nblocks; ++i) {
      auto yi = std::span<double>(y).subspan(i * bs, bs);
      for (Index p = lu_.row_offsets[i]; p < lu_.diag[i]; ++p)
        detail::block_gemv_sub(lu_.block(p), bs, std::span<const double>(y).subspan(lu_.cols[p] * bs, bs), yi);
    }
    for (Index i = lu_.nblocks; i-- > 0;) {
      auto yi = std::span<double>(y).subspan(i * bs, bs);
      for (Index p = lu_.diag[i] + 1; p < lu_.row_offsets[i + 1]; ++p)
        detail::block_gemv_sub(lu_.block(p), bs, std::span<const double>(y).subspan(lu_.cols[p] * bs, bs), yi);
      std::copy(yi.begin(), yi.end(), t.begin());
      const auto inv = dinv_block(i);
      for (Index a = 0; a < bs; ++a) {
        double s = 0.0;
        for (Index b = 0; b < bs; ++b) s += inv[a * bs + b] * t[b];
        yi[a] = s;
      }
    }
    view_.from_interleaved(y, w);
  }

  [[nodiscard]] std::vector<double> apply(std::span<const double> r) const {
    std::vector<double> w(r.size());
    apply(r, w);
    return w;
  }

 private:
  [[nodiscard]] std::span<const double> dinv_block(Index i) const noexcept {
    const Index bs = lu_.bs;
    return std::span<const double>(dinv_).subspan(i * bs * bs, bs * bs);
  }

  BlockLayout layout_;
  detail::InterleavedView view_;
  detail::BlockCsr lu_;
  std::vector<double> dinv_;
};

[[nodiscard]] inline BlockIluFactorization bilu0_setup(const CsrMatrix& a, const BlockLayout& layout) {
  return BlockIluFactorization(a, layout);
}

[[nodiscard]] inline std::vector<double> bilu0_apply(const BlockIluFactorization& f, std::span<const double> r) {
  return f.apply(r);
}

/// Block Gauss-Seidel from a zero initial guess with LU-factorized diagonal blocks.
class BlockGsState {
 public:
  BlockGsState() = default;

  BlockGsState(const CsrMatrix& a, const BlockLayout& layout, Index sweeps = 1)
      : layout_(layout), view_(layout), sweeps_(sweeps) {
    detail::check_layout(a, layout);
    if (sweeps < 1) throw InvalidArgument("block GS sweeps must be >= 1");
    blocks_ = detail::BlockCsr::from_interleaved(view_.matrix(a), layout.block_size);
    diag_.reserve(blocks_.nblocks);
    for (Index i = 0; i < blocks_.nblocks; ++i) {
      try {
        diag_.emplace_back(detail::to_dense_block(blocks_.block(blocks_.diag[i]), blocks_.bs));
      } catch (const SingularMatrixError&) {
        throw SingularMatrixError("block GS: singular diagonal block at cell " + std::to_string(i), i);
      }
    }
  }

  [[nodiscard]] const BlockLayout& layout() const noexcept { return layout_; }
  [[nodiscard]] Index sweeps() const noexcept { return sweeps_; }
  [[nodiscard]] const DenseFactorization& diagonal_factorization(Index cell) const { return diag_.at(cell); }

  void apply(std::span<const double> r, std::span<double> w) const {
    if (r.size() != layout_.size() || w.size() != layout_.size()) throw DimensionError("block GS apply: length mismatch");
    const Index bs = blocks_.bs;
    std::vector<double> rhs(r.size());
    view_.to_interleaved(r, rhs);
    std::vector<double> x(r.size(), 0.0);
    std::vector<double> t(bs);
    for (Index s = 0; s < sweeps_; ++s) {
      for (Index i = 0; i < blocks_.nblocks; ++i) {
        std::copy_n(rhs.begin() + static_cast<std::ptrdiff_t>(i * bs), bs, t.begin());
        for (Index p = blocks_.row_offsets[i]; p < blocks_.row_offsets[i + 1]; ++p) {
          if (p == blocks_.diag[i]) continue;
          detail::block_gemv_sub(blocks_.block(p), bs, std::span<const double>(x).subspan(blocks_.cols[p] * bs, bs), t);
        }
        diag_[i].solve_in_place(t);
        std::copy(t.begin(), t.end(), x.begin() + static_cast<std::ptrdiff_t>(i * bs));
      }
    }
    view_.from_interleaved(x, w);
  }

  [[nodiscard]] std::vector<double> apply(std::span<const double> r) const {
    std::vector<double> w(r.size());
    apply(r, w);
    return w;
  }

 private:
  BlockLayout layout_;
  detail::InterleavedView view_;
  Index sweeps_ = 1;
  detail::BlockCsr blocks_;
  std::vector<DenseFactorization> diag_;
};

[[nodiscard]] inline BlockGsState bgs_setup(const CsrMatrix& a_nn, const BlockLayout& layout, Index sweeps = 1) {
  return BlockGsState(a_nn, layout, sweeps);
}

[[nodiscard]] inline std::vector<double> bgs_apply(const BlockGsState& s, std::span<const double> r) {
  return s.apply(r);
}

}  // namespace msp
