#pragma once

// Benchmark pipeline behind the msp_bench tool: build or load systems, run
// MSP/ASMSP-preconditioned GMRES, report iteration and setup metrics.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "msp/amg.hpp"
#include "msp/coloring.hpp"
#include "msp/matrix_market.hpp"
#include "msp/multistage.hpp"
#include "msp/parallel.hpp"
#include "msp/problems.hpp"

namespace msp {

enum class SourceKind { MatrixMarket, Poisson2D, BlockComp, NewtonSeq };
enum class ReportFormat { Csv, Json };

struct RunConfig {
  SourceKind source = SourceKind::Poisson2D;
  std::filesystem::path matrix_path;
  std::filesystem::path rhs_path;
  Index nx = 16, ny = 16, nz = 1;
  Index nc = 2;
  double dt = 1.0;
  double coupling = 0.5;
  double margin = 0.1;
  double perm_sigma = 1.0;
  double drift = 1e-3;
  Index steps = 10;
  SmootherKind smoother = SmootherKind::PgsMultiColor;
  Index mu = 0;
  GmresConfig gmres;
  AmgParams amg;
  int threads = parallel::hardware_threads();
  ReportFormat report_format = ReportFormat::Csv;
  std::uint64_t seed = 42;
  std::filesystem::path dump_coloring;
  std::filesystem::path dump_hierarchy;
};

struct ReportRow {
  std::string smoother;
  Index mu = 0;
  Index setup_calls = 0;
  double setup_ratio = 0.0;
  Index iterations = 0;
  bool converged = false;
  double wall_time_seconds = 0.0;
  int threads = 1;
};

struct BenchmarkReport {
  std::vector<ReportRow> rows;

  [[nodiscard]] bool all_converged() const noexcept {
    for (const auto& r : rows)
      if (!r.converged) return false;
    return true;
  }
};

inline const char* const kReportCsvHeader = "smoother,mu,setup_calls,setup_ratio,iterations,converged,wall_time_seconds,threads";

inline void write_csv(const BenchmarkReport& report, std::ostream& out) {
  out << kReportCsvHeader << '\n';
  for (const auto& r : report.rows) {
    out << r.smoother << ',' << r.mu << ',' << r.setup_calls << ',' << std::setprecision(6) << r.setup_ratio << ','
        << r.iterations << ',' << (r.converged ? "true" : "false") << ',' << r.wall_time_seconds << ',' << r.threads
        << '\n';
  }
}

[[nodiscard]] inline nlohmann::json to_json(const BenchmarkReport& report) {
  auto rows = nlohmann::json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"smoother", r.smoother},
                    {"mu", r.mu},
                    {"setup_calls", r.setup_calls},
                    {"setup_ratio", r.setup_ratio},
                    {"iterations", r.iterations},
                    {"converged", r.converged},
                    {"wall_time_seconds", r.wall_time_seconds},
                    {"threads", r.threads}});
  return rows;
}

inline void write_report(const BenchmarkReport& report, ReportFormat format, std::ostream& out) {
  if (format == ReportFormat::Csv) write_csv(report, out);
  else out << to_json(report).dump(2) << '\n';
}

[[nodiscard]] inline BlockProblemSpec block_spec_for(const RunConfig& cfg) {
  BlockProblemSpec spec;
  spec.grid = GridSpec::uniform(cfg.nx, cfg.ny, cfg.nz);
  if (cfg.perm_sigma > 0.0) spec.grid.lognormal_permeability(cfg.seed, cfg.perm_sigma);
  spec.n_c = cfg.nc;
  spec.dt = cfg.dt;
  spec.coupling_strength = cfg.coupling;
  spec.diagonal_dominance_margin = cfg.margin;
  spec.seed = cfg.seed;
  return spec;
}

/// The systems a configuration describes, in solve order.
[[nodiscard]] inline std::vector<LinearSystem> build_systems(const RunConfig& cfg) {
  switch (cfg.source) {
    case SourceKind::MatrixMarket: {
      LinearSystem s;
      s.a = read_matrix_market(cfg.matrix_path);
      if (!s.a.is_square()) throw DimensionError("input matrix must be square");
      const Index bs = cfg.nc + 1;
      if (s.a.nrows() % bs != 0)
        throw DimensionError("matrix size " + std::to_string(s.a.nrows()) + " is not a multiple of block size " +
                             std::to_string(bs));
      if (cfg.rhs_path.empty()) {
        s.rhs = spmv(s.a, std::vector<double>(s.a.ncols(), 1.0));
      } else {
        s.rhs = read_vector(cfg.rhs_path);
        if (s.rhs.size() != s.a.nrows()) throw DimensionError("rhs length does not match matrix");
      }
      s.transfers = TransferOperators::from_layout({s.a.nrows() / bs, bs, BlockOrdering::CellInterleaved});
      return {std::move(s)};
    }
    case SourceKind::Poisson2D: {
      LinearSystem s;
      s.a = poisson2d(cfg.nx, cfg.ny);
      s.rhs = spmv(s.a, std::vector<double>(s.a.ncols(), 1.0));
      s.transfers = TransferOperators::from_layout({s.a.nrows(), 1, BlockOrdering::CellInterleaved});
      return {std::move(s)};
    }
    case SourceKind::BlockComp: return {block_jacobian(block_spec_for(cfg)).system};
    case SourceKind::NewtonSeq: {
      NewtonSequenceSpec spec;
      spec.base = block_spec_for(cfg);
      spec.steps = cfg.steps;
      spec.drift = cfg.drift;
      spec.seed = cfg.seed + 1;
      return newton_sequence(spec);
    }
  }
  return {};
}

[[nodiscard]] inline MspConfig msp_config_for(const RunConfig& cfg, SmootherKind smoother) {
  MspConfig m;
  m.amg = cfg.amg;
  m.amg.smoother = smoother;
  return m;
}

/// Writes the optional coloring / hierarchy dumps for the first system.
inline void write_dumps(const RunConfig& cfg, const LinearSystem& first) {
  if (cfg.dump_coloring.empty() && cfg.dump_hierarchy.empty()) return;
  const CsrMatrix app = extract_pressure_matrix(first.a, first.transfers);
  if (!cfg.dump_coloring.empty()) write_plan(color_matrix(app), cfg.dump_coloring);
  if (!cfg.dump_hierarchy.empty()) {
    const AmgHierarchy h(app, msp_config_for(cfg, cfg.smoother).amg);
    std::ofstream out(cfg.dump_hierarchy);
    if (!out) throw FormatError("cannot write '" + cfg.dump_hierarchy.string() + "'");
    out << h.summary().dump(2) << '\n';
  }
}

[[nodiscard]] inline ReportRow run_systems(const RunConfig& cfg, const std::vector<LinearSystem>& systems,
                                           SmootherKind smoother) {
  const parallel::ScopedThreads scope(cfg.threads);
  const auto result = asmsp_solve_sequence(systems, cfg.mu, msp_config_for(cfg, smoother), cfg.gmres);
  ReportRow row;
  row.smoother = to_string(smoother);
  row.mu = cfg.mu;
  row.setup_calls = result.stats.setup_calls;
  row.setup_ratio = result.stats.setup_ratio;
  row.iterations = result.stats.iterations;
  row.converged = result.stats.converged && result.solutions.size() == systems.size();
  row.wall_time_seconds = result.stats.time_seconds;
  row.threads = cfg.threads;
  return row;
}

/// Runs the configured pipeline once.
[[nodiscard]] inline BenchmarkReport run_benchmark(const RunConfig& cfg) {
  const auto systems = build_systems(cfg);
  if (!systems.empty()) write_dumps(cfg, systems.front());
  return {{run_systems(cfg, systems, cfg.smoother)}};
}

/// Same problem under each pressure smoother: Jacobi, natural-order GS,
/// multi-color PGS and its sequential color-order reference.
[[nodiscard]] inline BenchmarkReport compare_smoothers(const RunConfig& cfg) {
  const auto systems = build_systems(cfg);
  if (!systems.empty()) write_dumps(cfg, systems.front());
  BenchmarkReport report;
  for (auto kind : {SmootherKind::Jacobi, SmootherKind::GsNaturalOrder, SmootherKind::PgsMultiColor,
                    SmootherKind::GsColorOrder})
    report.rows.push_back(run_systems(cfg, systems, kind));
  return report;
}

}  // namespace msp
