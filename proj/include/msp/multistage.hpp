#pragma once

// Multiplicative multi-stage preconditioner for cell-blocked reservoir
// Jacobians and its adaptive-setup driver.
//
// One application computes w = B g through three corrections, each followed
// by a fresh residual against the current matrix:
//
//   w  = Π_N B_N Π_Nᵀ g                 concentration block, block Gauss-Seidel
//   w += Π_P B_P Π_Pᵀ (g − A w)         pressure block, AMG V-cycle
//   w += R (g − A w)                    whole system, block ILU(0)
//
// so that I − B A = (I − R A)(I − Π_P B_P Π_Pᵀ A)(I − Π_N B_N Π_Nᵀ A).

#include <chrono>
#include <limits>
#include <memory>
#include <optional>
#include <ranges>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "msp/amg.hpp"
#include "msp/krylov.hpp"
#include "msp/smoothers.hpp"
#include "msp/sparse.hpp"

namespace msp {

/// Index sets selecting the pressure unknown (one per cell) and the
/// concentration unknowns (n_c per cell, cell-major) of a blocked system.
struct TransferOperators {
  BlockLayout layout;
  std::vector<Index> pressure_indices;
  std::vector<Index> concentration_indices;

  [[nodiscard]] static TransferOperators from_layout(const BlockLayout& layout) {
    if (layout.block_size == 0) throw InvalidArgument("block size must be >= 1");
    TransferOperators t;
    t.layout = layout;
    t.pressure_indices.reserve(layout.ncells);
    t.concentration_indices.reserve(layout.ncells * (layout.block_size - 1));
    for (Index c = 0; c < layout.ncells; ++c) {
      t.pressure_indices.push_back(layout.index(c, 0));
      for (Index v = 1; v < layout.block_size; ++v) t.concentration_indices.push_back(layout.index(c, v));
    }
    return t;
  }

  [[nodiscard]] Index size() const noexcept { return layout.size(); }
  [[nodiscard]] Index num_components() const noexcept { return layout.block_size - 1; }

  /// Layout of Π_Nᵀ A Π_N: n_c unknowns per cell, interleaved.
  [[nodiscard]] BlockLayout concentration_layout() const noexcept {
    return {layout.ncells, num_components(), BlockOrdering::CellInterleaved};
  }

  /// Throws unless the two index sets partition [0, size).
  void validate(Index nrows) const {
    if (nrows != size()) throw DimensionError("transfer operators do not match matrix size");
    if (pressure_indices.size() != layout.ncells ||
        concentration_indices.size() != layout.ncells * num_components())
      throw DimensionError("transfer operator index counts do not match layout");
    std::vector<char> hit(nrows, 0);
    for (auto list : {std::span<const Index>(pressure_indices), std::span<const Index>(concentration_indices)})
      for (Index i : list) {
        if (i >= nrows || hit[i]) throw InvalidArgument("transfer operators must partition the unknowns");
        hit[i] = 1;
      }
  }
};

/// Πᵀ v.
[[nodiscard]] inline std::vector<double> restrict_to(std::span<const double> v, std::span<const Index> indices) {
  std::vector<double> out(indices.size());
  for (Index k = 0; k < indices.size(); ++k) out[k] = v[indices[k]];
  return out;
}

/// w += Π e.
inline void prolongate_add(std::span<const double> e, std::span<const Index> indices, std::span<double> w) {
  for (Index k = 0; k < indices.size(); ++k) w[indices[k]] += e[k];
}

/// Π_Pᵀ A Π_P in cell order.
[[nodiscard]] inline CsrMatrix extract_pressure_matrix(const CsrMatrix& a, const TransferOperators& t) {
  t.validate(a.nrows());
  return extract_submatrix(a, t.pressure_indices, t.pressure_indices);
}

/// Π_Nᵀ A Π_N in cell-major order.
[[nodiscard]] inline CsrMatrix extract_concentration_matrix(const CsrMatrix& a, const TransferOperators& t) {
  t.validate(a.nrows());
  return extract_submatrix(a, t.concentration_indices, t.concentration_indices);
}

/// Placeholder for pressure decoupling (quasi-IMPES, ABF, ...) applied before
/// the pressure block is extracted. Only the identity is implemented.
enum class PressureDecoupling { None };

struct MspConfig {
  AmgParams amg;
  Index bgs_sweeps = 1;
  PressureDecoupling decoupling = PressureDecoupling::None;
};

class MspPreconditioner {
 public:
  MspPreconditioner(std::shared_ptr<const CsrMatrix> a, TransferOperators transfers, MspConfig config = {})
      : a_(std::move(a)), transfers_(std::move(transfers)), config_(std::move(config)) {
    if (!a_) throw InvalidArgument("MSP setup: null matrix");
    if (!a_->is_square()) throw DimensionError("MSP setup: matrix must be square");
    transfers_.validate(a_->nrows());
    const auto start = std::chrono::steady_clock::now();
    try {
      if (transfers_.num_components() > 0)
        concentration_ = BlockGsState(extract_concentration_matrix(*a_, transfers_), transfers_.concentration_layout(),
                                      config_.bgs_sweeps);
    } catch (const SingularMatrixError& e) {
      throw SingularMatrixError(std::string("MSP concentration stage: ") + e.what(), e.location());
    }
    try {
      pressure_ = AmgHierarchy(extract_pressure_matrix(*a_, transfers_), config_.amg);
    } catch (const SingularMatrixError& e) {
      throw SingularMatrixError(std::string("MSP pressure stage: ") + e.what(), e.location());
    }
    try {
      relaxation_ = BlockIluFactorization(*a_, transfers_.layout);
    } catch (const SingularMatrixError& e) {
      throw SingularMatrixError(std::string("MSP relaxation stage: ") + e.what(), e.location());
    }
    setup_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  MspPreconditioner(const CsrMatrix& a, TransferOperators transfers, MspConfig config = {})
      : MspPreconditioner(std::make_shared<const CsrMatrix>(a), std::move(transfers), std::move(config)) {}

  /// Keeps every factorized stage but computes residuals with `a` from now on.
  void rebind(std::shared_ptr<const CsrMatrix> a) {
    if (!a || a->nrows() != a_->nrows() || a->ncols() != a_->ncols())
      throw DimensionError("MSP rebind: matrix dimensions changed");
    a_ = std::move(a);
  }

  [[nodiscard]] const CsrMatrix& matrix() const noexcept { return *a_; }
  [[nodiscard]] const TransferOperators& transfers() const noexcept { return transfers_; }
  [[nodiscard]] const std::optional<BlockGsState>& concentration_stage() const noexcept { return concentration_; }
  [[nodiscard]] const AmgHierarchy& pressure_stage() const noexcept { return pressure_; }
  [[nodiscard]] const BlockIluFactorization& relaxation_stage() const noexcept { return relaxation_; }
  [[nodiscard]] double setup_seconds() const noexcept { return setup_seconds_; }
  [[nodiscard]] Index size() const noexcept { return a_->nrows(); }

  void apply(std::span<const double> g, std::span<double> w) const {
    const Index n = size();
    if (g.size() != n || w.size() != n) throw DimensionError("MSP apply: length mismatch");
    std::fill(w.begin(), w.end(), 0.0);
    std::vector<double> r(g.begin(), g.end());  // g − A·0
    if (concentration_) {
      const auto e = concentration_->apply(restrict_to(r, transfers_.concentration_indices));
      prolongate_add(e, transfers_.concentration_indices, w);
      residual(*a_, w, g, r);
    }
    const auto ep = pressure_.vcycle(restrict_to(r, transfers_.pressure_indices));
    prolongate_add(ep, transfers_.pressure_indices, w);
    residual(*a_, w, g, r);
    const auto er = relaxation_.apply(r);
    for (Index i = 0; i < n; ++i) w[i] += er[i];
  }

  [[nodiscard]] std::vector<double> apply(std::span<const double> g) const {
    std::vector<double> w(g.size());
    apply(g, w);
    return w;
  }

  void operator()(std::span<const double> in, std::span<double> out) const { apply(in, out); }

 private:
  std::shared_ptr<const CsrMatrix> a_;
  TransferOperators transfers_;
  MspConfig config_;
  std::optional<BlockGsState> concentration_;
  AmgHierarchy pressure_;
  BlockIluFactorization relaxation_;
  double setup_seconds_ = 0.0;
};

[[nodiscard]] inline MspPreconditioner msp_setup(const CsrMatrix& a, const TransferOperators& t,
                                                 const MspConfig& config = {}) {
  return MspPreconditioner(a, t, config);
}

[[nodiscard]] inline std::vector<double> msp_apply(const MspPreconditioner& m, std::span<const double> g) {
  return m.apply(g);
}

// ---------------------------------------------------------------------------
// Adaptive setup

/// μ large enough that the previous preconditioner is always reused.
inline constexpr Index unlimited_mu = std::numeric_limits<Index>::max();

enum class SetupDecision { Reuse, Setup };

[[nodiscard]] inline std::string to_string(SetupDecision d) { return d == SetupDecision::Reuse ? "reuse" : "setup"; }

/// Controller state across Newton steps. `iota` is the 1-based index of the
/// step about to be solved.
struct AdaptiveState {
  Index mu = 0;
  Index iota = 1;
  std::optional<Index> last_iterations;
  std::shared_ptr<MspPreconditioner> cached;
  Index setup_calls = 0;
};

/// Setup on the first step, after a solve that needed more than μ
/// iterations, or when the matrix size changed; otherwise reuse.
[[nodiscard]] inline SetupDecision asmsp_decide(const AdaptiveState& state, const CsrMatrix& a_new) {
  if (state.iota <= 1 || !state.cached || !state.last_iterations) return SetupDecision::Setup;
  const CsrMatrix& old = state.cached->matrix();
  if (old.nrows() != a_new.nrows() || old.ncols() != a_new.ncols()) return SetupDecision::Setup;
  return *state.last_iterations > state.mu ? SetupDecision::Setup : SetupDecision::Reuse;
}

struct LinearSystem {
  CsrMatrix a;
  std::vector<double> rhs;
  TransferOperators transfers;
};

struct StepRecord {
  Index step = 0;  // 1-based
  SetupDecision decision = SetupDecision::Setup;
  Index iterations = 0;
  bool converged = false;
  double relative_residual = 0.0;
  double setup_seconds = 0.0;
  double solve_seconds = 0.0;
};

struct SequenceStats {
  Index mu = 0;
  Index setup_calls = 0;
  double setup_ratio = 0.0;  // setup time / (setup + Krylov) time
  Index iterations = 0;
  double time_seconds = 0.0;
  bool converged = true;
  std::optional<Index> failed_step;
  std::vector<StepRecord> steps;

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"mu", mu},
            {"setup_calls", setup_calls},
            {"setup_ratio", setup_ratio},
            {"iterations", iterations},
            {"time_seconds", time_seconds}};
  }
};

/// Drives one linear solve per Newton step, reusing the preconditioner
/// according to asmsp_decide. With `always_setup` it is plain MSP.
class AdaptiveMspSolver {
 public:
  AdaptiveMspSolver(Index mu, MspConfig msp = {}, GmresConfig gmres = {}, bool always_setup = false)
      : msp_(std::move(msp)), gmres_(gmres), always_setup_(always_setup) {
    state_.mu = mu;
    stats_.mu = mu;
  }

  [[nodiscard]] const AdaptiveState& state() const noexcept { return state_; }
  [[nodiscard]] const SequenceStats& stats() const noexcept { return stats_; }

  /// Solves one system from a zero initial guess into `x`.
  StepRecord solve(const LinearSystem& system, std::span<double> x) {
    StepRecord rec;
    rec.step = state_.iota;
    auto a = std::make_shared<const CsrMatrix>(system.a);
    rec.decision = always_setup_ ? SetupDecision::Setup : asmsp_decide(state_, *a);
    if (rec.decision == SetupDecision::Setup) {
      state_.cached = std::make_shared<MspPreconditioner>(a, system.transfers, msp_);
      rec.setup_seconds = state_.cached->setup_seconds();
      ++state_.setup_calls;
    } else {
      state_.cached->rebind(a);
    }
    std::fill(x.begin(), x.end(), 0.0);
    const auto result = gmres_solve(*a, system.rhs, x, *state_.cached, gmres_);
    rec.iterations = result.iterations;
    rec.converged = result.converged;
    rec.relative_residual = result.final_relative_residual;
    rec.solve_seconds = result.wall_time;

    state_.last_iterations = result.iterations;
    ++state_.iota;
    stats_.setup_calls = state_.setup_calls;
    stats_.iterations += rec.iterations;
    setup_total_ += rec.setup_seconds;
    stats_.time_seconds += rec.setup_seconds + rec.solve_seconds;
    stats_.setup_ratio = stats_.time_seconds > 0.0 ? setup_total_ / stats_.time_seconds : 0.0;
    if (!rec.converged && stats_.converged) {
      stats_.converged = false;
      stats_.failed_step = rec.step;
    }
    stats_.steps.push_back(rec);
    return rec;
  }

 private:
  MspConfig msp_;
  GmresConfig gmres_;
  bool always_setup_;
  AdaptiveState state_;
  SequenceStats stats_;
  double setup_total_ = 0.0;
};

struct SequenceResult {
  std::vector<std::vector<double>> solutions;
  SequenceStats stats;
};

namespace detail {
template <std::ranges::input_range Systems>
SequenceResult run_sequence(Systems&& systems, AdaptiveMspSolver solver) {
  SequenceResult out;
  for (const LinearSystem& s : systems) {
    std::vector<double> x(s.a.nrows(), 0.0);
    const auto rec = solver.solve(s, x);
    out.solutions.push_back(std::move(x));
    if (!rec.converged) break;
  }
  out.stats = solver.stats();
  return out;
}
}  // namespace detail

/// Adaptive-setup solve of a Newton-like sequence of systems. Stops at the
/// first step whose GMRES solve fails; `stats.failed_step` names it.
template <std::ranges::input_range Systems>
SequenceResult asmsp_solve_sequence(Systems&& systems, Index mu, const MspConfig& msp = {},
                                    const GmresConfig& gmres = {}) {
  return detail::run_sequence(std::forward<Systems>(systems), AdaptiveMspSolver(mu, msp, gmres, false));
}

/// Reference: a fresh setup on every step.
template <std::ranges::input_range Systems>
SequenceResult msp_solve_sequence(Systems&& systems, const MspConfig& msp = {}, const GmresConfig& gmres = {}) {
  return detail::run_sequence(std::forward<Systems>(systems), AdaptiveMspSolver(0, msp, gmres, true));
}

}  // namespace msp
