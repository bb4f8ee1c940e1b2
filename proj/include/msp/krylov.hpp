#pragma once

// Right-preconditioned restarted GMRES(m).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "msp/sparse.hpp"

namespace msp {

struct GmresConfig {
  Index restart = 30;
  Index max_iterations = 1000;
  double rel_tolerance = 1e-5;
  bool two_pass_orthogonalization = false;

  void validate() const {
    if (restart < 1) throw InvalidArgument("GMRES restart must be >= 1");
    if (max_iterations < 1) throw InvalidArgument("GMRES max_iterations must be >= 1");
    if (!(rel_tolerance > 0.0 && rel_tolerance < 1.0)) throw InvalidArgument("GMRES tolerance must lie in (0, 1)");
  }
};

enum class GmresStatus { Converged, MaxIterations, Breakdown };

struct SolveStats {
  Index iterations = 0;
  bool converged = false;
  GmresStatus status = GmresStatus::MaxIterations;
  double final_relative_residual = 0.0;
  Index setup_calls = 0;
  double setup_ratio = 0.0;
  double wall_time = 0.0;  // seconds
};

/// Anything usable as `op(in, out)` computing out = M in.
template <typename Op>
concept LinearOperator = requires(const Op& op, std::span<const double> in, std::span<double> out) {
  { op(in, out) };
};

struct IdentityPreconditioner {
  void operator()(std::span<const double> in, std::span<double> out) const {
    std::copy(in.begin(), in.end(), out.begin());
  }
};

/// Solves A x = b with right preconditioning (A M y = b, x = M y) so the
/// convergence test applies to the true residual ‖b − A x‖ / ‖b‖. The
/// iteration count is the number of Arnoldi steps. `x` holds the initial
/// guess on entry and the solution on exit.
template <LinearOperator Precond>
SolveStats gmres_solve(const CsrMatrix& a, std::span<const double> b, std::span<double> x, const Precond& precond,
                       const GmresConfig& config = {}) {
  config.validate();
  if (!a.is_square() || b.size() != a.nrows() || x.size() != a.nrows())
    throw DimensionError("GMRES: matrix/vector dimensions disagree");
  const auto start = std::chrono::steady_clock::now();
  const Index n = a.nrows();
  const Index m = config.restart;
  SolveStats stats;
  auto finish = [&](GmresStatus status, double rel) {
    stats.status = status;
    stats.converged = status == GmresStatus::Converged;
    stats.final_relative_residual = rel;
    stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return stats;
  };

  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return finish(GmresStatus::Converged, 0.0);
  }

  std::vector<double> r(n);
  residual(a, x, b, r);
  double rel = norm2(r) / bnorm;
  if (rel <= config.rel_tolerance) return finish(GmresStatus::Converged, rel);

  std::vector<std::vector<double>> basis(m + 1, std::vector<double>(n));
  std::vector<double> hess((m + 1) * m, 0.0);  // column-major (m+1) x m
  auto h = [&](Index i, Index j) -> double& { return hess[j * (m + 1) + i]; };
  std::vector<double> cs(m), sn(m), g(m + 1), y(m), z(n), w(n);
  const double breakdown_tol = 1e-14 * bnorm;

  while (stats.iterations < config.max_iterations) {
    const double beta = norm2(r);
    for (Index i = 0; i < n; ++i) basis[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;

    Index k = 0;
    bool breakdown = false;
    bool estimate_converged = false;
    while (k < m && stats.iterations < config.max_iterations) {
      precond(std::span<const double>(basis[k]), std::span<double>(z));
      spmv(a, z, w);
      const Index passes = config.two_pass_orthogonalization ? 2 : 1;
      for (Index i = 0; i <= k; ++i) h(i, k) = 0.0;
      for (Index pass = 0; pass < passes; ++pass)
        for (Index i = 0; i <= k; ++i) {
          const double hik = dot(w, basis[i]);
          h(i, k) += hik;
          for (Index t = 0; t < n; ++t) w[t] -= hik * basis[i][t];
        }
      const double hnext = norm2(w);
      h(k + 1, k) = hnext;
      breakdown = hnext < breakdown_tol;
      if (!breakdown)
        for (Index t = 0; t < n; ++t) basis[k + 1][t] = w[t] / hnext;

      for (Index i = 0; i < k; ++i) {
        const double t0 = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
        h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
        h(i, k) = t0;
      }
      const double denom = std::hypot(h(k, k), h(k + 1, k));
      cs[k] = denom == 0.0 ? 1.0 : h(k, k) / denom;
      sn[k] = denom == 0.0 ? 0.0 : h(k + 1, k) / denom;
      h(k, k) = cs[k] * h(k, k) + sn[k] * h(k + 1, k);
      h(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];

      ++k;
      ++stats.iterations;
      estimate_converged = std::abs(g[k]) / bnorm <= config.rel_tolerance;
      if (estimate_converged || breakdown) break;
    }

    // x += M V_k y with H_k y = g_k.
    for (Index i = k; i-- > 0;) {
      double s = g[i];
      for (Index j = i + 1; j < k; ++j) s -= h(i, j) * y[j];
      y[i] = h(i, i) == 0.0 ? 0.0 : s / h(i, i);
    }
    std::fill(w.begin(), w.end(), 0.0);
    for (Index j = 0; j < k; ++j)
      for (Index t = 0; t < n; ++t) w[t] += y[j] * basis[j][t];
    precond(std::span<const double>(w), std::span<double>(z));
    for (Index t = 0; t < n; ++t) x[t] += z[t];

    residual(a, x, b, r);
    rel = norm2(r) / bnorm;
    if (rel <= config.rel_tolerance) return finish(GmresStatus::Converged, rel);
    if (breakdown) return finish(GmresStatus::Breakdown, rel);
  }
  return finish(GmresStatus::MaxIterations, rel);
}

[[nodiscard]] inline std::string to_string(GmresStatus s) {
  switch (s) {
    case GmresStatus::Converged: return "converged";
    case GmresStatus::MaxIterations: return "max-iterations";
    case GmresStatus::Breakdown: return "breakdown";
  }
  return "unknown";
}

}  // namespace msp
