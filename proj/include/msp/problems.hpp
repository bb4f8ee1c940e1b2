#pragma once

// Desk-scale test problems with the block structure of fully implicit
// compositional reservoir Jacobians.
//
// Unknowns per cell are the pressure followed by n_c concentrations. The
// pressure-pressure block is a two-point flux (TPFA) matrix with harmonic
// face permeabilities; the remaining couplings are synthetic but keep the
// usual sign structure: upwinded concentration transport, a pressure
// dependence of the component fluxes, and local volume-balance couplings.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "msp/matrix_market.hpp"
#include "msp/multistage.hpp"
#include "msp/sparse.hpp"

namespace msp {

struct GridSpec {
  Index nx = 1, ny = 1, nz = 1;
  double dx = 1.0, dy = 1.0, dz = 1.0;
  std::vector<double> permeability;  // per cell, > 0
  std::vector<double> porosity;      // per cell, in (0, 1]

  [[nodiscard]] static GridSpec uniform(Index nx, Index ny, Index nz, double perm = 1.0, double poro = 0.2) {
    GridSpec g;
    g.nx = nx;
    g.ny = ny;
    g.nz = nz;
    g.permeability.assign(g.ncells(), perm);
    g.porosity.assign(g.ncells(), poro);
    return g;
  }

  /// Replaces the permeability by exp(N(log mean, sigma²)) drawn from `seed`.
  GridSpec& lognormal_permeability(std::uint64_t seed, double sigma, double mean = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(std::log(mean), sigma);
    permeability.resize(ncells());
    for (double& k : permeability) k = std::exp(normal(rng));
    return *this;
  }

  [[nodiscard]] Index ncells() const noexcept { return nx * ny * nz; }
  [[nodiscard]] Index cell(Index i, Index j, Index k) const noexcept { return i + nx * (j + ny * k); }
  [[nodiscard]] double bulk_volume() const noexcept { return dx * dy * dz; }

  void validate() const {
    if (nx == 0 || ny == 0 || nz == 0) throw InvalidArgument("grid dimensions must be positive");
    if (!(dx > 0.0 && dy > 0.0 && dz > 0.0)) throw InvalidArgument("cell sizes must be positive");
    if (permeability.size() != ncells() || porosity.size() != ncells())
      throw DimensionError("per-cell property arrays must have ncells entries");
    for (double k : permeability)
      if (!(k > 0.0)) throw InvalidArgument("permeability must be positive");
    for (double p : porosity)
      if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("porosity must lie in (0, 1]");
  }

  /// Same grid with one more cell layer in x; new cells copy their x-neighbour.
  [[nodiscard]] GridSpec extended_x() const {
    GridSpec g = *this;
    g.nx = nx + 1;
    g.permeability.assign(g.ncells(), 0.0);
    g.porosity.assign(g.ncells(), 0.0);
    for (Index k = 0; k < nz; ++k)
      for (Index j = 0; j < ny; ++j)
        for (Index i = 0; i < g.nx; ++i) {
          const Index src = cell(std::min(i, nx - 1), j, k);
          g.permeability[g.cell(i, j, k)] = permeability[src];
          g.porosity[g.cell(i, j, k)] = porosity[src];
        }
    return g;
  }
};

struct Face {
  Index lo;  // lower cell index
  Index hi;
  double transmissibility;
};

[[nodiscard]] inline double harmonic_mean(double a, double b) noexcept { return 2.0 * a * b / (a + b); }

/// All interior faces with T = L κ_harm / d.
[[nodiscard]] inline std::vector<Face> grid_faces(const GridSpec& g) {
  g.validate();
  std::vector<Face> faces;
  auto add = [&](Index a, Index b, double area, double dist) {
    faces.push_back({a, b, area * harmonic_mean(g.permeability[a], g.permeability[b]) / dist});
  };
  for (Index k = 0; k < g.nz; ++k)
    for (Index j = 0; j < g.ny; ++j)
      for (Index i = 0; i < g.nx; ++i) {
        const Index c = g.cell(i, j, k);
        if (i + 1 < g.nx) add(c, g.cell(i + 1, j, k), g.dy * g.dz, g.dx);
        if (j + 1 < g.ny) add(c, g.cell(i, j + 1, k), g.dx * g.dz, g.dy);
        if (k + 1 < g.nz) add(c, g.cell(i, j, k + 1), g.dx * g.dy, g.dz);
      }
  return faces;
}

/// φ V_bulk / Δt per cell.
[[nodiscard]] inline std::vector<double> accumulation(const GridSpec& g, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  std::vector<double> acc(g.ncells());
  for (Index c = 0; c < g.ncells(); ++c) acc[c] = g.porosity[c] * g.bulk_volume() / dt;
  return acc;
}

/// Two-point flux pressure matrix: −T_s off the diagonal for every face,
/// Σ T_s + φ V_bulk / Δt on the diagonal.
[[nodiscard]] inline CsrMatrix tpfa_pressure_matrix(const GridSpec& g, double dt = 1.0) {
  const auto faces = grid_faces(g);
  const auto acc = accumulation(g, dt);
  std::vector<Triplet> t;
  t.reserve(g.ncells() + 4 * faces.size());
  for (Index c = 0; c < g.ncells(); ++c) t.push_back({c, c, acc[c]});
  for (const auto& f : faces) {
    t.push_back({f.lo, f.lo, f.transmissibility});
    t.push_back({f.hi, f.hi, f.transmissibility});
    t.push_back({f.lo, f.hi, -f.transmissibility});
    t.push_back({f.hi, f.lo, -f.transmissibility});
  }
  return CsrMatrix::from_triplets(g.ncells(), g.ncells(), std::move(t));
}

/// 5-point Laplacian on an nx × ny grid with Dirichlet boundary (stencil 4, −1).
[[nodiscard]] inline CsrMatrix poisson2d(Index nx, Index ny) {
  std::vector<Triplet> t;
  for (Index j = 0; j < ny; ++j)
    for (Index i = 0; i < nx; ++i) {
      const Index c = i + nx * j;
      t.push_back({c, c, 4.0});
      if (i > 0) t.push_back({c, c - 1, -1.0});
      if (i + 1 < nx) t.push_back({c, c + 1, -1.0});
      if (j > 0) t.push_back({c, c - nx, -1.0});
      if (j + 1 < ny) t.push_back({c, c + nx, -1.0});
    }
  return CsrMatrix::from_triplets(nx * ny, nx * ny, std::move(t));
}

/// 7-point Laplacian with Dirichlet boundary (stencil 6, −1).
[[nodiscard]] inline CsrMatrix poisson3d(Index nx, Index ny, Index nz) {
  std::vector<Triplet> t;
  const Index n = nx * ny * nz;
  for (Index k = 0; k < nz; ++k)
    for (Index j = 0; j < ny; ++j)
      for (Index i = 0; i < nx; ++i) {
        const Index c = i + nx * (j + ny * k);
        t.push_back({c, c, 6.0});
        if (i > 0) t.push_back({c, c - 1, -1.0});
        if (i + 1 < nx) t.push_back({c, c + 1, -1.0});
        if (j > 0) t.push_back({c, c - nx, -1.0});
        if (j + 1 < ny) t.push_back({c, c + nx, -1.0});
        if (k > 0) t.push_back({c, c - nx * ny, -1.0});
        if (k + 1 < nz) t.push_back({c, c + nx * ny, -1.0});
      }
  return CsrMatrix::from_triplets(n, n, std::move(t));
}

/// Tridiagonal [−1, 2, −1].
[[nodiscard]] inline CsrMatrix poisson1d(Index n) {
  std::vector<Triplet> t;
  for (Index i = 0; i < n; ++i) {
    t.push_back({i, i, 2.0});
    if (i > 0) t.push_back({i, i - 1, -1.0});
    if (i + 1 < n) t.push_back({i, i + 1, -1.0});
  }
  return CsrMatrix::from_triplets(n, n, std::move(t));
}

struct BlockProblemSpec {
  GridSpec grid = GridSpec::uniform(4, 4, 1);
  Index n_c = 2;
  double dt = 1.0;
  double coupling_strength = 0.5;
  double diagonal_dominance_margin = 0.1;
  BlockOrdering ordering = BlockOrdering::CellInterleaved;
  std::uint64_t seed = 42;
};

struct GeneratedProblem {
  LinearSystem system;
  std::vector<double> exact_solution;
};

/// Cell-blocked Jacobian with a manufactured solution; rhs = A x*.
[[nodiscard]] inline GeneratedProblem block_jacobian(const BlockProblemSpec& spec) {
  const GridSpec& g = spec.grid;
  const auto faces = grid_faces(g);
  const auto acc = accumulation(g, spec.dt);
  const Index nc = spec.n_c;
  const Index bs = nc + 1;
  const Index ncells = g.ncells();
  const BlockLayout interleaved{ncells, bs, BlockOrdering::CellInterleaved};
  const double coupling = spec.coupling_strength;
  if (coupling < 0.0) throw InvalidArgument("coupling strength must be nonnegative");
  if (spec.diagonal_dominance_margin < 0.0) throw InvalidArgument("dominance margin must be nonnegative");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Manufactured solution: pressure in [0.5, 1.5], concentrations in [0.1, 1].
  std::vector<double> x_star(interleaved.size());
  for (Index c = 0; c < ncells; ++c) {
    x_star[interleaved.index(c, 0)] = 0.5 + unit(rng);
    for (Index k = 1; k < bs; ++k) x_star[interleaved.index(c, k)] = 0.1 + 0.9 * unit(rng);
  }
  // Per-cell mole fractions (sum to one) and partial volume weights.
  std::vector<double> frac(ncells * nc), alpha(ncells * nc), beta(ncells * nc * nc);
  for (Index c = 0; c < ncells; ++c) {
    double total = 0.0;
    for (Index k = 0; k < nc; ++k) total += frac[c * nc + k] = 0.1 + unit(rng);
    for (Index k = 0; k < nc; ++k) frac[c * nc + k] /= total;
    for (Index k = 0; k < nc; ++k) alpha[c * nc + k] = 0.2 + 0.6 * unit(rng);
    for (Index k = 0; k < nc * nc; ++k) beta[c * nc * nc + k] = 0.2 * unit(rng) - 0.1;
  }

  std::vector<Triplet> t;
  auto add = [&](Index cell_r, Index var_r, Index cell_c, Index var_c, double v) {
    if (v != 0.0) t.push_back({interleaved.index(cell_r, var_r), interleaved.index(cell_c, var_c), v});
  };

  // Pressure rows: TPFA plus local volume-balance couplings, scaled so the
  // row stays strictly diagonally dominant for every coupling strength.
  const double volume_scale = coupling / (1.0 + coupling);
  for (Index c = 0; c < ncells; ++c) {
    add(c, 0, c, 0, acc[c]);
    for (Index k = 0; k < nc; ++k) add(c, 0, c, k + 1, volume_scale * acc[c] * alpha[c * nc + k] / static_cast<double>(nc));
  }
  for (const auto& f : faces) {
    add(f.lo, 0, f.lo, 0, f.transmissibility);
    add(f.hi, 0, f.hi, 0, f.transmissibility);
    add(f.lo, 0, f.hi, 0, -f.transmissibility);
    add(f.hi, 0, f.lo, 0, -f.transmissibility);
  }

  // Concentration rows.
  for (Index c = 0; c < ncells; ++c)
    for (Index k = 0; k < nc; ++k) {
      add(c, k + 1, c, k + 1, acc[c]);
      for (Index m = 0; m < nc; ++m) add(c, k + 1, c, m + 1, coupling * acc[c] * beta[(c * nc + k) * nc + m]);
    }
  if (nc > 0 && coupling != 0.0) {
    for (const auto& f : faces) {
      const double p_lo = x_star[interleaved.index(f.lo, 0)];
      const double p_hi = x_star[interleaved.index(f.hi, 0)];
      const Index up = p_lo >= p_hi ? f.lo : f.hi;
      const Index down = up == f.lo ? f.hi : f.lo;
      const double flow = f.transmissibility * (0.1 + std::abs(p_lo - p_hi));
      for (Index k = 0; k < nc; ++k) {
        // Component flux derivative with respect to pressure (upstream fraction).
        const double dp = coupling * f.transmissibility * frac[up * nc + k];
        add(f.lo, k + 1, f.lo, 0, dp);
        add(f.lo, k + 1, f.hi, 0, -dp);
        add(f.hi, k + 1, f.hi, 0, dp);
        add(f.hi, k + 1, f.lo, 0, -dp);
        // Upwinded transport of the concentration itself.
        add(up, k + 1, up, k + 1, coupling * flow);
        add(down, k + 1, up, k + 1, -coupling * flow);
      }
    }
  }

  CsrMatrix a = CsrMatrix::from_triplets(interleaved.size(), interleaved.size(), std::move(t));

  // Enforce diagonal dominance of the concentration rows.
  {
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    auto vals = a.values_mut();
    for (Index c = 0; c < ncells; ++c)
      for (Index k = 1; k < bs; ++k) {
        const Index row = interleaved.index(c, k);
        double off = 0.0;
        Index diag_pos = offsets[row];
        for (Index p = offsets[row]; p < offsets[row + 1]; ++p) {
          if (cols[p] == row) diag_pos = p;
          else off += std::abs(vals[p]);
        }
        vals[diag_pos] = std::max(vals[diag_pos], (1.0 + spec.diagonal_dominance_margin) * off);
      }
  }

  const BlockLayout layout{ncells, bs, spec.ordering};
  GeneratedProblem out;
  if (spec.ordering == BlockOrdering::CellInterleaved) {
    out.exact_solution = std::move(x_star);
  } else {
    const auto to_segregated = inverse_permutation(to_interleaved_permutation(layout));
    a = permute(a, to_segregated);
    out.exact_solution = permute_vector(x_star, to_segregated);
  }
  out.system.rhs = spmv(a, out.exact_solution);
  out.system.a = std::move(a);
  out.system.transfers = TransferOperators::from_layout(layout);
  return out;
}

struct NewtonSequenceSpec {
  BlockProblemSpec base;
  Index steps = 10;
  double drift = 1e-3;
  std::uint64_t seed = 7;
  std::vector<Index> resize_steps;  // 1-based steps at which the grid grows by one x-layer
};

/// Emulated Newton chain: step 1 is block_jacobian(base); every later step
/// multiplies each stored value by (1 + drift·u), u ~ U[−1, 1], keeping the
/// pattern. Right-hand sides are A^(ι) x* for the current manufactured x*.
class NewtonSequence {
 public:
  explicit NewtonSequence(NewtonSequenceSpec spec) : spec_(std::move(spec)), rng_(spec_.seed) {}

  [[nodiscard]] const NewtonSequenceSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const std::vector<double>& exact_solution() const noexcept { return current_.exact_solution; }

  std::optional<LinearSystem> next() {
    if (step_ >= spec_.steps) return std::nullopt;
    ++step_;
    const bool resize = std::find(spec_.resize_steps.begin(), spec_.resize_steps.end(), step_) != spec_.resize_steps.end();
    if (step_ == 1 || (resize && step_ > 1)) {
      if (resize && step_ > 1) spec_.base.grid = spec_.base.grid.extended_x();
      current_ = block_jacobian(spec_.base);
    } else {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (double& v : current_.system.a.values_mut()) v *= 1.0 + spec_.drift * u(rng_);
      current_.system.rhs = spmv(current_.system.a, current_.exact_solution);
    }
    return current_.system;
  }

  [[nodiscard]] std::vector<LinearSystem> collect() {
    std::vector<LinearSystem> out;
    while (auto s = next()) out.push_back(std::move(*s));
    return out;
  }

 private:
  NewtonSequenceSpec spec_;
  std::mt19937_64 rng_;
  Index step_ = 0;
  GeneratedProblem current_;
};

[[nodiscard]] inline std::vector<LinearSystem> newton_sequence(const NewtonSequenceSpec& spec) {
  return NewtonSequence(spec).collect();
}

[[nodiscard]] inline std::string to_string(BlockOrdering o) {
  return o == BlockOrdering::CellInterleaved ? "cell-interleaved" : "variable-segregated";
}

/// Writes `<prefix>.mtx`, `<prefix>.rhs` and a `<prefix>.json` manifest.
inline void export_problem(const LinearSystem& system, const std::filesystem::path& prefix, nlohmann::json manifest) {
  auto with_ext = [&](const char* ext) {
    auto p = prefix;
    p += ext;
    return p;
  };
  write_matrix_market(system.a, with_ext(".mtx"));
  write_vector(system.rhs, with_ext(".rhs"));
  manifest["rows"] = system.a.nrows();
  manifest["nnz"] = system.a.nnz();
  manifest["ncells"] = system.transfers.layout.ncells;
  manifest["n_c"] = system.transfers.num_components();
  manifest["layout"] = to_string(system.transfers.layout.ordering);
  manifest["matrix"] = with_ext(".mtx").filename().string();
  manifest["rhs"] = with_ext(".rhs").filename().string();
  std::ofstream out(with_ext(".json"));
  if (!out) throw FormatError("cannot write manifest for '" + prefix.string() + "'");
  out << manifest.dump(2) << '\n';
}

[[nodiscard]] inline nlohmann::json manifest_for(const BlockProblemSpec& spec) {
  return {{"nx", spec.grid.nx},         {"ny", spec.grid.ny}, {"nz", spec.grid.nz}, {"dt", spec.dt},
          {"coupling", spec.coupling_strength}, {"margin", spec.diagonal_dominance_margin}, {"seed", spec.seed}};
}

}  // namespace msp
