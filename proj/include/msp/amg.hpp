#pragma once

// Unsmoothed aggregation AMG with nonsymmetric pairwise matching, V-cycle
// application and a dense direct solve on the coarsest level.

#include <cmath>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "msp/coloring.hpp"
#include "msp/smoothers.hpp"
#include "msp/sparse.hpp"

namespace msp {

/// Piecewise-constant prolongation: fine row i belongs to aggregate_of[i].
struct AggregationMap {
  Index n_fine = 0;
  Index n_coarse = 0;
  std::vector<Index> aggregate_of;

  [[nodiscard]] std::vector<Index> aggregate_sizes() const {
    std::vector<Index> sizes(n_coarse, 0);
    for (Index a : aggregate_of) ++sizes[a];
    return sizes;
  }

  /// rc[I] = sum of r[i] over i in aggregate I (Pᵀ r).
  void restrict_to(std::span<const double> r, std::span<double> rc) const {
    std::fill(rc.begin(), rc.end(), 0.0);
    for (Index i = 0; i < n_fine; ++i) rc[aggregate_of[i]] += r[i];
  }

  /// x[i] += e[aggregate_of[i]] (x += P e).
  void prolongate_add(std::span<const double> e, std::span<double> x) const {
    for (Index i = 0; i < n_fine; ++i) x[i] += e[aggregate_of[i]];
  }

  friend bool operator==(const AggregationMap&, const AggregationMap&) = default;
};

/// Greedy pairwise matching. The unaggregated row with the fewest unaggregated
/// neighbours is paired with its strongest unaggregated neighbour, where the
/// strength of (i, j) is -(a_ij + a_ji)/2 among negative couplings, or
/// |a_ij + a_ji| when row i has none. Ties go to the lowest index; rows with
/// no unaggregated neighbour become singletons.
[[nodiscard]] inline AggregationMap pairwise_aggregate(const CsrMatrix& a) {
  if (!a.is_square()) throw DimensionError("pairwise_aggregate requires a square matrix");
  const Index n = a.nrows();
  const CsrMatrix at = transpose_pattern(a);

  // Symmetrized couplings c_ij = a_ij + a_ji, off-diagonal only.
  std::vector<std::vector<std::pair<Index, double>>> coupling(n);
  for (Index i = 0; i < n; ++i) {
    const auto r = a.row(i);
    const auto rt = at.row(i);
    Index p = 0, q = 0;
    while (p < r.cols.size() || q < rt.cols.size()) {
      const Index cp = p < r.cols.size() ? r.cols[p] : n;
      const Index cq = q < rt.cols.size() ? rt.cols[q] : n;
      const Index j = std::min(cp, cq);
      double v = 0.0;
      bool stored = false;
      if (cp == j) {
        stored = stored || r.vals[p] != 0.0;
        v += r.vals[p++];
      }
      if (cq == j) {
        stored = stored || rt.vals[q] != 0.0;
        v += rt.vals[q++];
      }
      if (j != i && stored) coupling[i].emplace_back(j, v);
    }
  }

  constexpr Index unassigned = static_cast<Index>(-1);
  AggregationMap map;
  map.n_fine = n;
  map.aggregate_of.assign(n, unassigned);
  std::vector<Index> free_neighbors(n);
  for (Index i = 0; i < n; ++i) free_neighbors[i] = coupling[i].size();

  auto fewest_first = [&](Index x, Index y) {
    return free_neighbors[x] != free_neighbors[y] ? free_neighbors[x] < free_neighbors[y] : x < y;
  };
  std::set<Index, decltype(fewest_first)> queue(fewest_first);
  for (Index i = 0; i < n; ++i) queue.insert(i);

  auto take = [&](Index v, Index aggregate) {
    queue.erase(v);
    map.aggregate_of[v] = aggregate;
    for (const auto& [u, c] : coupling[v]) {
      if (map.aggregate_of[u] != unassigned) continue;
      queue.erase(u);
      --free_neighbors[u];
      queue.insert(u);
    }
  };

  while (!queue.empty()) {
    const Index i = *queue.begin();
    Index best = unassigned;
    double best_strength = 0.0;
    bool best_negative = false;
    for (const auto& [j, c] : coupling[i]) {
      if (map.aggregate_of[j] != unassigned) continue;
      const bool negative = c < 0.0;
      const double strength = negative ? -c / 2.0 : std::abs(c) / 2.0;
      const bool better = best == unassigned || (negative && !best_negative) ||
                          (negative == best_negative && strength > best_strength);
      if (better) {
        best = j;
        best_strength = strength;
        best_negative = negative;
      }
    }
    const Index aggregate = map.n_coarse++;
    take(i, aggregate);
    if (best != unassigned) take(best, aggregate);
  }
  return map;
}

/// Maps with aggregates of size up to 4: pairwise matching applied to the
/// pairwise-coarsened matrix, composed with the first map.
[[nodiscard]] inline AggregationMap compose(const AggregationMap& first, const AggregationMap& second) {
  AggregationMap m;
  m.n_fine = first.n_fine;
  m.n_coarse = second.n_coarse;
  m.aggregate_of.resize(first.n_fine);
  for (Index i = 0; i < first.n_fine; ++i) m.aggregate_of[i] = second.aggregate_of[first.aggregate_of[i]];
  return m;
}

/// A_c = Pᵀ A P for the 0/1 prolongation of `map`.
[[nodiscard]] inline CsrMatrix galerkin_coarsen(const CsrMatrix& a, const AggregationMap& map) {
  if (map.n_fine != a.nrows() || !a.is_square()) throw DimensionError("aggregation map does not match matrix");
  std::vector<Triplet> entries;
  entries.reserve(a.nnz());
  for (Index i = 0; i < a.nrows(); ++i) {
    const auto r = a.row(i);
    for (Index k = 0; k < r.cols.size(); ++k)
      entries.push_back({map.aggregate_of[i], map.aggregate_of[r.cols[k]], r.vals[k]});
  }
  return CsrMatrix::from_triplets(map.n_coarse, map.n_coarse, std::move(entries));
}

struct AmgParams {
  Index coarsest_max_dof = 100;
  Index max_levels = 20;
  Index pre_sweeps = 1;
  Index post_sweeps = 1;
  SmootherKind smoother = SmootherKind::PgsMultiColor;
  bool double_pairwise = false;
};

struct AmgLevel {
  CsrMatrix a;
  PointSmoother pre;
  PointSmoother post;
  AggregationMap to_coarse;
};

/// Multigrid hierarchy. Levels hold the matrices that are smoothed; the last
/// (coarsest) matrix is solved directly.
class AmgHierarchy {
 public:
  AmgHierarchy() = default;

  AmgHierarchy(const CsrMatrix& a, AmgParams params) : params_(params) {
    if (!a.is_square()) throw DimensionError("AMG requires a square matrix");
    if (params.max_levels < 1) throw InvalidArgument("max_levels must be >= 1");
    CsrMatrix current = a;
    // max_levels counts every level including the coarsest.
    while (current.nrows() > params.coarsest_max_dof && levels_.size() + 1 < params.max_levels) {
      AggregationMap map = pairwise_aggregate(current);
      if (params.double_pairwise && map.n_coarse > 1) map = compose(map, pairwise_aggregate(galerkin_coarsen(current, map)));
      // Stop when coarsening stalls (less than 10% reduction).
      if (10 * map.n_coarse > 9 * current.nrows()) break;
      CsrMatrix coarse = galerkin_coarsen(current, map);
      AmgLevel level;
      level.pre = PointSmoother(current, SmootherConfig{params.smoother, params.pre_sweeps, std::nullopt, 1.0});
      level.post = PointSmoother(current, SmootherConfig{params.smoother, params.post_sweeps, level.pre.plan(), 1.0});
      level.a = std::move(current);
      level.to_coarse = std::move(map);
      levels_.push_back(std::move(level));
      current = std::move(coarse);
    }
    coarsest_a_ = std::move(current);
    try {
      coarsest_ = dense_factorize(coarsest_a_);
    } catch (const SingularMatrixError& e) {
      throw SingularMatrixError(std::string("AMG coarsest level: ") + e.what(), e.location());
    }
  }

  [[nodiscard]] const AmgParams& params() const noexcept { return params_; }
  [[nodiscard]] const std::vector<AmgLevel>& levels() const noexcept { return levels_; }
  [[nodiscard]] const CsrMatrix& coarsest_matrix() const noexcept { return coarsest_a_; }
  [[nodiscard]] const DenseFactorization& coarsest() const noexcept { return coarsest_; }
  [[nodiscard]] Index num_levels() const noexcept { return levels_.size() + 1; }
  [[nodiscard]] Index size() const noexcept { return levels_.empty() ? coarsest_a_.nrows() : levels_.front().a.nrows(); }

  /// Sizes of all levels, finest first, coarsest last.
  [[nodiscard]] std::vector<Index> level_sizes() const {
    std::vector<Index> s;
    for (const auto& l : levels_) s.push_back(l.a.nrows());
    s.push_back(coarsest_a_.nrows());
    return s;
  }

  /// One V-cycle from a zero initial guess: w ≈ A⁻¹ r. Post-smoothing runs in
  /// mirrored order so that the cycle is symmetric for symmetric A.
  void vcycle(std::span<const double> r, std::span<double> w) const {
    if (r.size() != size() || w.size() != size()) throw DimensionError("V-cycle: length mismatch");
    cycle(0, r, w);
  }

  [[nodiscard]] std::vector<double> vcycle(std::span<const double> r) const {
    std::vector<double> w(r.size());
    vcycle(r, w);
    return w;
  }

  [[nodiscard]] nlohmann::json summary() const {
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& l : levels_) {
      levels.push_back({{"size", l.a.nrows()},
                        {"nnz", l.a.nnz()},
                        {"colors", l.pre.plan() ? l.pre.plan()->num_groups() : 0},
                        {"smoother", to_string(l.pre.config().kind)}});
    }
    levels.push_back({{"size", coarsest_a_.nrows()}, {"nnz", coarsest_a_.nnz()}, {"direct", true}});
    return {{"levels", levels}, {"coarsest_max_dof", params_.coarsest_max_dof}};
  }

 private:
  void cycle(Index l, std::span<const double> r, std::span<double> w) const {
    if (l == levels_.size()) {
      std::copy(r.begin(), r.end(), w.begin());
      coarsest_.solve_in_place(w);
      return;
    }
    const AmgLevel& level = levels_[l];
    std::fill(w.begin(), w.end(), 0.0);
    level.pre.smooth(level.a, w, r, SweepDirection::Forward);
    std::vector<double> res(r.size());
    residual(level.a, w, r, res);
    std::vector<double> rc(level.to_coarse.n_coarse);
    level.to_coarse.restrict_to(res, rc);
    std::vector<double> ec(rc.size());
    cycle(l + 1, rc, ec);
    level.to_coarse.prolongate_add(ec, w);
    level.post.smooth(level.a, w, r, SweepDirection::Backward);
  }

  AmgParams params_;
  std::vector<AmgLevel> levels_;
  CsrMatrix coarsest_a_;
  DenseFactorization coarsest_;
};

[[nodiscard]] inline AmgHierarchy amg_setup(const CsrMatrix& a, const AmgParams& params = {}) {
  return AmgHierarchy(a, params);
}

[[nodiscard]] inline std::vector<double> amg_vcycle(const AmgHierarchy& h, std::span<const double> r) {
  return h.vcycle(r);
}

}  // namespace msp
