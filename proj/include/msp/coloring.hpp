#pragma once

// Algebraic multi-coloring. The adjacency graph of a matrix is partitioned
// into groups of mutually non-adjacent vertices by repeatedly splitting off a
// greedy independent set, preferring high-degree vertices and growing the set
// through "second circle" neighbours.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msp/sparse.hpp"

namespace msp {

/// Symmetrized off-diagonal nonzero pattern of a square matrix.
class AdjacencyGraph {
 public:
  AdjacencyGraph() : offsets_(1, 0) {}
  AdjacencyGraph(std::vector<Index> offsets, std::vector<Index> neighbors)
      : offsets_(std::move(offsets)), neighbors_(std::move(neighbors)) {}

  /// Graph from explicit undirected edges (used by tests and generators).
  [[nodiscard]] static AdjacencyGraph from_edges(Index n, std::span<const std::pair<Index, Index>> edges) {
    std::vector<std::vector<Index>> adj(n);
    for (const auto& [i, j] : edges) {
      if (i >= n || j >= n) throw DimensionError("edge endpoint out of range");
      if (i == j) continue;
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
    return from_lists(adj);
  }

  [[nodiscard]] Index size() const noexcept { return offsets_.size() - 1; }
  [[nodiscard]] std::span<const Index> neighbors(Index v) const noexcept {
    return std::span<const Index>(neighbors_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
  }
  [[nodiscard]] Index degree(Index v) const noexcept { return offsets_[v + 1] - offsets_[v]; }
  [[nodiscard]] Index max_degree() const noexcept {
    Index m = 0;
    for (Index v = 0; v < size(); ++v) m = std::max(m, degree(v));
    return m;
  }
  [[nodiscard]] bool adjacent(Index u, Index v) const noexcept {
    const auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
  }
  [[nodiscard]] Index num_edges() const noexcept { return neighbors_.size() / 2; }

  friend bool operator==(const AdjacencyGraph&, const AdjacencyGraph&) = default;

  static AdjacencyGraph from_lists(std::vector<std::vector<Index>>& adj) {
    std::vector<Index> offsets(adj.size() + 1, 0);
    std::vector<Index> flat;
    for (Index v = 0; v < adj.size(); ++v) {
      auto& list = adj[v];
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
      flat.insert(flat.end(), list.begin(), list.end());
      offsets[v + 1] = flat.size();
    }
    return AdjacencyGraph(std::move(offsets), std::move(flat));
  }

 private:
  std::vector<Index> offsets_;
  std::vector<Index> neighbors_;
};

/// Edge (i, j) iff i != j and a_ij != 0 or a_ji != 0. Stored zeros are ignored.
[[nodiscard]] inline AdjacencyGraph build_adjacency(const CsrMatrix& a) {
  if (!a.is_square()) throw DimensionError("build_adjacency requires a square matrix");
  std::vector<std::vector<Index>> adj(a.nrows());
  for (Index i = 0; i < a.nrows(); ++i) {
    const auto r = a.row(i);
    for (Index k = 0; k < r.cols.size(); ++k) {
      const Index j = r.cols[k];
      if (j == i || r.vals[k] == 0.0) continue;
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
  }
  return AdjacencyGraph::from_lists(adj);
}

/// Partition of the vertices into independent groups V_1..V_g. Each group is
/// stored in ascending vertex order; groups are kept in creation order.
struct ColoringPlan {
  Index n = 0;
  std::vector<Index> group_of;
  std::vector<std::vector<Index>> groups;

  [[nodiscard]] Index num_groups() const noexcept { return groups.size(); }

  /// V_1 ‖ V_2 ‖ … ‖ V_g: the sequential order a multi-color sweep reproduces.
  [[nodiscard]] std::vector<Index> color_order() const {
    std::vector<Index> order;
    order.reserve(n);
    for (const auto& g : groups) order.insert(order.end(), g.begin(), g.end());
    return order;
  }

  friend bool operator==(const ColoringPlan&, const ColoringPlan&) = default;
};

struct SplitResult {
  std::vector<Index> selected;  // W: independent
  std::vector<Index> deferred;  // W̄
};

namespace detail {

struct DegreeFirst {
  const AdjacencyGraph* graph;
  bool operator()(Index a, Index b) const noexcept {
    const Index da = graph->degree(a);
    const Index db = graph->degree(b);
    return da != db ? da > db : a < b;
  }
};

}  // namespace detail

/// Greedy split of `vertices` into an independent set W and the rest W̄.
///
/// The next candidate is the highest-degree vertex of the frontier (the
/// undetermined second-circle neighbours of accepted vertices), or of the
/// whole undetermined set when the frontier is empty; ties go to the lowest
/// index. An accepted vertex sends its undetermined neighbours to W̄.
[[nodiscard]] inline SplitResult vertices_splitting(std::span<const Index> vertices, const AdjacencyGraph& graph) {
  enum class State : unsigned char { Outside, Undetermined, Selected, Deferred };
  std::vector<State> state(graph.size(), State::Outside);

  using OrderedSet = std::set<Index, detail::DegreeFirst>;
  OrderedSet remaining(detail::DegreeFirst{&graph});
  OrderedSet frontier(detail::DegreeFirst{&graph});
  for (Index v : vertices) {
    if (v >= graph.size()) throw DimensionError("vertex out of range");
    state[v] = State::Undetermined;
    remaining.insert(v);
  }

  SplitResult out;
  auto defer = [&](Index v) {
    state[v] = State::Deferred;
    remaining.erase(v);
    frontier.erase(v);
    out.deferred.push_back(v);
  };

  while (!remaining.empty()) {
    const Index v = frontier.empty() ? *remaining.begin() : *frontier.begin();
    const auto nb = graph.neighbors(v);
    const bool blocked =
        std::any_of(nb.begin(), nb.end(), [&](Index u) { return state[u] == State::Selected; });
    if (blocked) {
      defer(v);
      continue;
    }
    state[v] = State::Selected;
    remaining.erase(v);
    frontier.erase(v);
    out.selected.push_back(v);
    for (Index u : nb)
      if (state[u] == State::Undetermined) defer(u);
    for (Index u : nb)
      for (Index w : graph.neighbors(u))
        if (state[w] == State::Undetermined) frontier.insert(w);
  }
  return out;
}

/// Repeated splitting of the deferred set until every vertex has a group.
[[nodiscard]] inline ColoringPlan vertices_grouping(const AdjacencyGraph& graph) {
  ColoringPlan plan;
  plan.n = graph.size();
  plan.group_of.assign(plan.n, 0);
  std::vector<Index> remaining(plan.n);
  for (Index v = 0; v < plan.n; ++v) remaining[v] = v;
  while (!remaining.empty()) {
    auto split = vertices_splitting(remaining, graph);
    std::sort(split.selected.begin(), split.selected.end());
    for (Index v : split.selected) plan.group_of[v] = plan.groups.size();
    plan.groups.push_back(std::move(split.selected));
    remaining = std::move(split.deferred);
  }
  return plan;
}

[[nodiscard]] inline ColoringPlan color_matrix(const CsrMatrix& a) { return vertices_grouping(build_adjacency(a)); }

/// Outcome of checking a plan against the grouping principles.
struct PlanReport {
  bool covers_all = true;   // every vertex is in some group
  bool disjoint = true;     // no vertex is in two groups
  bool independent = true;  // no edge inside a group
  std::optional<std::pair<Index, Index>> violation;
  std::string message;

  [[nodiscard]] bool ok() const noexcept { return covers_all && disjoint && independent; }
};

[[nodiscard]] inline PlanReport validate_plan(const ColoringPlan& plan, const AdjacencyGraph& graph) {
  PlanReport report;
  if (plan.n != graph.size() || plan.group_of.size() != plan.n) {
    report.covers_all = false;
    report.message = "plan size does not match graph";
    return report;
  }
  std::vector<Index> seen_in(plan.n, static_cast<Index>(-1));
  for (Index g = 0; g < plan.groups.size(); ++g) {
    for (Index v : plan.groups[g]) {
      if (v >= plan.n) {
        report.covers_all = false;
        report.message = "group " + std::to_string(g) + " holds out-of-range vertex " + std::to_string(v);
        return report;
      }
      if (seen_in[v] != static_cast<Index>(-1)) {
        if (report.disjoint) {
          report.disjoint = false;
          report.violation = std::pair{v, v};
          report.message = "vertex " + std::to_string(v) + " appears in groups " + std::to_string(seen_in[v]) +
                           " and " + std::to_string(g);
        }
        continue;
      }
      seen_in[v] = g;
      if (plan.group_of[v] != g) {
        report.disjoint = false;
        report.violation = std::pair{v, v};
        report.message = "group_of disagrees with group lists at vertex " + std::to_string(v);
      }
    }
  }
  for (Index v = 0; v < plan.n; ++v) {
    if (seen_in[v] == static_cast<Index>(-1)) {
      report.covers_all = false;
      if (report.message.empty()) report.message = "vertex " + std::to_string(v) + " is in no group";
      return report;
    }
  }
  for (Index v = 0; v < plan.n; ++v)
    for (Index u : graph.neighbors(v))
      if (u > v && seen_in[u] == seen_in[v]) {
        report.independent = false;
        report.violation = std::pair{v, u};
        report.message = "adjacent vertices " + std::to_string(v) + " and " + std::to_string(u) + " share group " +
                         std::to_string(seen_in[v]);
        return report;
      }
  return report;
}

/// One `vertex_id group_id` line per vertex.
inline void write_plan(const ColoringPlan& plan, std::ostream& out) {
  for (Index v = 0; v < plan.n; ++v) out << v << ' ' << plan.group_of[v] << '\n';
}

inline void write_plan(const ColoringPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  write_plan(plan, out);
}

}  // namespace msp
