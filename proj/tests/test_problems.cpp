#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "oracles.hpp"

using msp::BlockOrdering;
using msp::BlockProblemSpec;
using msp::CsrMatrix;
using msp::GridSpec;
using msp::Index;

namespace {

GridSpec random_grid(std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> dim(1, 6);
  std::uniform_real_distribution<double> size(0.5, 3.0), poro(0.05, 1.0);
  GridSpec g = GridSpec::uniform(dim(rng), dim(rng), dim(rng));
  g.dx = size(rng);
  g.dy = size(rng);
  g.dz = size(rng);
  g.lognormal_permeability(rng(), 2.0);
  for (double& p : g.porosity) p = poro(rng);
  return g;
}

BlockProblemSpec block_spec(GridSpec grid, Index nc, double coupling = 0.5, std::uint64_t seed = 42) {
  BlockProblemSpec s;
  s.grid = std::move(grid);
  s.n_c = nc;
  s.coupling_strength = coupling;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Tpfa, TwoCells) {
  const auto a = msp::tpfa_pressure_matrix(GridSpec::uniform(2, 1, 1));
  EXPECT_EQ(oracle::dense(a), (oracle::Mat(2, 2) << 1.2, -1, -1, 1.2).finished());
}

TEST(Tpfa, SingleCellIsAccumulation) {
  const auto a = msp::tpfa_pressure_matrix(GridSpec::uniform(1, 1, 1, 1.0, 0.3), 0.5);
  ASSERT_EQ(a.nrows(), 1u);
  EXPECT_DOUBLE_EQ(a.at(0, 0), 0.6);
}

TEST(Tpfa, HarmonicTransmissibility) {
  GridSpec g = GridSpec::uniform(2, 1, 1);
  g.permeability = {1.0, 4.0};
  const auto a = msp::tpfa_pressure_matrix(g);
  EXPECT_DOUBLE_EQ(a.at(0, 1), -1.6);
  EXPECT_DOUBLE_EQ(a.at(0, 0), 1.6 + 0.2);
}

TEST(Tpfa, FaceGeometry) {
  GridSpec g = GridSpec::uniform(1, 2, 1);
  g.dx = 2.0;
  g.dy = 4.0;
  g.dz = 3.0;
  // Face area dx·dz = 6 over distance dy = 4.
  EXPECT_DOUBLE_EQ(msp::tpfa_pressure_matrix(g).at(1, 0), -1.5);
}

TEST(Tpfa, MMatrixOnRandomGrids) {
  std::mt19937_64 rng(91);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = random_grid(rng);
    const double dt = std::uniform_real_distribution<double>(0.1, 10.0)(rng);
    const oracle::Mat a = oracle::dense(msp::tpfa_pressure_matrix(g, dt));
    EXPECT_EQ(a, a.transpose());
    for (Index i = 0; i < g.ncells(); ++i) {
      for (Index j = 0; j < g.ncells(); ++j)
        if (i != j) EXPECT_LE(a(i, j), 0.0);
      const double acc = g.porosity[i] * g.dx * g.dy * g.dz / dt;
      EXPECT_GT(a.row(i).sum(), 0.0);
      EXPECT_NEAR(a.row(i).sum(), acc, 1e-12 * a(i, i));
    }
  }
}

TEST(Tpfa, InvalidGridsThrow) {
  GridSpec g = GridSpec::uniform(2, 2, 1);
  g.permeability[1] = 0.0;
  EXPECT_THROW((void)msp::tpfa_pressure_matrix(g), msp::InvalidArgument);
  g = GridSpec::uniform(2, 2, 1, 1.0, 1.5);
  EXPECT_THROW((void)msp::tpfa_pressure_matrix(g), msp::InvalidArgument);
  g = GridSpec::uniform(2, 2, 1);
  g.porosity.pop_back();
  EXPECT_THROW((void)msp::tpfa_pressure_matrix(g), msp::DimensionError);
  EXPECT_THROW((void)msp::tpfa_pressure_matrix(GridSpec::uniform(2, 2, 1), 0.0), msp::InvalidArgument);
}

TEST(Poisson, Stencils) {
  const auto a = msp::poisson2d(3, 3);
  EXPECT_EQ(a.nnz(), 9u + 2 * 12u);
  EXPECT_DOUBLE_EQ(a.at(4, 4), 4.0);
  EXPECT_DOUBLE_EQ(a.at(4, 1), -1.0);
  const auto b = msp::poisson3d(2, 2, 2);
  EXPECT_DOUBLE_EQ(b.at(0, 0), 6.0);
  EXPECT_EQ(b.nnz(), 8u + 2 * 12u);
  EXPECT_EQ(oracle::dense(msp::poisson1d(3)), (oracle::Mat(3, 3) << 2, -1, 0, -1, 2, -1, 0, -1, 2).finished());
}

TEST(BlockJacobian, NoComponentsIsTpfa) {
  std::mt19937_64 rng(92);
  for (int trial = 0; trial < 10; ++trial) {
    auto spec = block_spec(random_grid(rng), 0);
    const auto p = msp::block_jacobian(spec);
    EXPECT_EQ(p.system.a, msp::tpfa_pressure_matrix(spec.grid, spec.dt));
  }
}

TEST(BlockJacobian, PressureBlockIsTpfa) {
  std::mt19937_64 rng(93);
  for (int trial = 0; trial < 20; ++trial) {
    for (auto ordering : {BlockOrdering::CellInterleaved, BlockOrdering::VariableSegregated}) {
      auto spec = block_spec(random_grid(rng), 1 + trial % 3, 0.25 * (trial % 5), trial);
      spec.ordering = ordering;
      spec.dt = 0.5 + trial;
      const auto p = msp::block_jacobian(spec);
      EXPECT_EQ(msp::extract_pressure_matrix(p.system.a, p.system.transfers), msp::tpfa_pressure_matrix(spec.grid, spec.dt));
    }
  }
}

TEST(BlockJacobian, ManufacturedResidual) {
  std::mt19937_64 rng(94);
  auto check = [](const msp::GeneratedProblem& p) {
    const oracle::Vec r = oracle::dense(p.system.a) * oracle::vec(p.exact_solution) - oracle::vec(p.system.rhs);
    EXPECT_LE(r.norm(), 1e-13 * oracle::vec(p.system.rhs).norm());
  };
  check(msp::block_jacobian(block_spec(GridSpec::uniform(2, 2, 1), 2)));
  for (int trial = 0; trial < 20; ++trial) check(msp::block_jacobian(block_spec(random_grid(rng), trial % 4, 0.7, trial)));
}

TEST(BlockJacobian, StrictRowDominance) {
  std::mt19937_64 rng(95);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = msp::block_jacobian(block_spec(random_grid(rng), 1 + trial % 3, 2.0 * (trial % 3), trial));
    const oracle::Mat a = oracle::dense(p.system.a);
    for (Index i = 0; i < a.rows(); ++i) {
      const double off = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
      EXPECT_GT(a(i, i), off) << "row " << i;
    }
  }
}

TEST(BlockJacobian, LayoutsArePermutationsOfEachOther) {
  auto spec = block_spec(GridSpec::uniform(3, 2, 2), 2);
  const auto inter = msp::block_jacobian(spec);
  spec.ordering = BlockOrdering::VariableSegregated;
  const auto seg = msp::block_jacobian(spec);
  const msp::BlockLayout layout{12, 3, BlockOrdering::VariableSegregated};
  const auto to_seg = msp::inverse_permutation(msp::to_interleaved_permutation(layout));
  EXPECT_EQ(msp::permute(inter.system.a, to_seg), seg.system.a);
  EXPECT_EQ(msp::permute_vector(inter.exact_solution, to_seg), seg.exact_solution);
}

TEST(BlockJacobian, ZeroCouplingKeepsOnlyPressureFaces) {
  const auto spec = block_spec(GridSpec::uniform(3, 3, 1), 2, 0.0);
  const auto p = msp::block_jacobian(spec);
  const Index bs = p.system.transfers.layout.block_size;
  const auto offsets = p.system.a.row_offsets();
  const auto cols = p.system.a.col_indices();
  for (Index row = 0; row < p.system.a.nrows(); ++row)
    for (Index k = offsets[row]; k < offsets[row + 1]; ++k) {
      const Index col = cols[k];
      if (row / bs == col / bs) continue;
      EXPECT_EQ(row % bs, 0u);
      EXPECT_EQ(col % bs, 0u);
    }
}

TEST(BlockJacobian, ZeroCouplingBiluExactOnLine) {
  const auto p = msp::block_jacobian(block_spec(GridSpec::uniform(8, 1, 1), 2, 0.0));
  const msp::BlockIluFactorization f(p.system.a, p.system.transfers.layout);
  EXPECT_LE(oracle::max_abs_diff(f.apply(p.system.rhs), p.exact_solution), 1e-13);
}

TEST(BlockJacobian, DeterministicInSeed) {
  const auto spec = block_spec(GridSpec::uniform(4, 3, 2), 2, 0.5, 17);
  const auto p1 = msp::block_jacobian(spec);
  const auto p2 = msp::block_jacobian(spec);
  EXPECT_EQ(p1.system.a, p2.system.a);
  EXPECT_EQ(p1.system.rhs, p2.system.rhs);
  auto other = spec;
  other.seed = 18;
  EXPECT_NE(msp::block_jacobian(other).system.a, p1.system.a);
}

TEST(BlockJacobian, InvalidSpecThrows) {
  auto spec = block_spec(GridSpec::uniform(2, 2, 1), 1, -1.0);
  EXPECT_THROW((void)msp::block_jacobian(spec), msp::InvalidArgument);
  spec.coupling_strength = 0.5;
  spec.diagonal_dominance_margin = -0.1;
  EXPECT_THROW((void)msp::block_jacobian(spec), msp::InvalidArgument);
}

TEST(NewtonSequence, ZeroDriftIsConstant) {
  msp::NewtonSequenceSpec spec;
  spec.base = block_spec(GridSpec::uniform(4, 4, 1), 2);
  spec.steps = 5;
  spec.drift = 0.0;
  const auto systems = msp::newton_sequence(spec);
  ASSERT_EQ(systems.size(), 5u);
  for (const auto& s : systems) {
    EXPECT_EQ(s.a, systems[0].a);
    EXPECT_EQ(s.rhs, systems[0].rhs);
  }
}

TEST(NewtonSequence, DriftKeepsPatternAndBoundsDeltas) {
  msp::NewtonSequenceSpec spec;
  spec.base = block_spec(GridSpec::uniform(5, 4, 2), 2);
  spec.steps = 6;
  spec.drift = 1e-3;
  const auto systems = msp::newton_sequence(spec);
  for (Index k = 1; k < systems.size(); ++k) {
    const auto& prev = systems[k - 1].a;
    const auto& cur = systems[k].a;
    ASSERT_TRUE(std::ranges::equal(prev.row_offsets(), cur.row_offsets()));
    ASSERT_TRUE(std::ranges::equal(prev.col_indices(), cur.col_indices()));
    bool changed = false;
    for (Index i = 0; i < cur.nnz(); ++i) {
      const double rel = std::abs(cur.values()[i] - prev.values()[i]) / std::abs(prev.values()[i]);
      EXPECT_LE(rel, spec.drift * (1 + 1e-12));
      changed = changed || rel > 0.0;
    }
    EXPECT_TRUE(changed);
  }
}

TEST(NewtonSequence, ManufacturedSolutionHoldsEveryStep) {
  msp::NewtonSequenceSpec spec;
  spec.base = block_spec(GridSpec::uniform(4, 3, 1), 1);
  spec.steps = 4;
  spec.drift = 1e-2;
  msp::NewtonSequence seq(spec);
  while (auto s = seq.next()) {
    const oracle::Vec r = oracle::dense(s->a) * oracle::vec(seq.exact_solution()) - oracle::vec(s->rhs);
    EXPECT_LE(r.norm(), 1e-13 * oracle::vec(s->rhs).norm());
  }
}

TEST(NewtonSequence, SeedReproducible) {
  msp::NewtonSequenceSpec spec;
  spec.base = block_spec(GridSpec::uniform(3, 3, 1), 2);
  spec.steps = 4;
  spec.drift = 1e-2;
  const auto a = msp::newton_sequence(spec);
  const auto b = msp::newton_sequence(spec);
  for (Index k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].a, b[k].a);
    EXPECT_EQ(a[k].rhs, b[k].rhs);
  }
  spec.seed += 1;
  EXPECT_NE(msp::newton_sequence(spec)[1].a, a[1].a);
}

TEST(NewtonSequence, ResizeAddsLayer) {
  msp::NewtonSequenceSpec spec;
  spec.base = block_spec(GridSpec::uniform(3, 2, 1), 1);
  spec.steps = 4;
  spec.resize_steps = {3};
  const auto systems = msp::newton_sequence(spec);
  EXPECT_EQ(systems[0].a.nrows(), 12u);
  EXPECT_EQ(systems[1].a.nrows(), 12u);
  EXPECT_EQ(systems[2].a.nrows(), 16u);
  EXPECT_EQ(systems[3].a.nrows(), 16u);
  EXPECT_EQ(systems[2].transfers.layout.ncells, 8u);
}

TEST(ExportProblem, WritesMatrixRhsAndManifest) {
  const auto spec = block_spec(GridSpec::uniform(2, 2, 1), 1);
  const auto p = msp::block_jacobian(spec);
  const auto dir = std::filesystem::temp_directory_path() / ("msp_export_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  msp::export_problem(p.system, dir / "case", msp::manifest_for(spec));
  EXPECT_EQ(msp::read_matrix_market(dir / "case.mtx"), p.system.a);
  EXPECT_EQ(msp::read_vector(dir / "case.rhs"), p.system.rhs);
  std::ifstream in(dir / "case.json");
  const auto manifest = nlohmann::json::parse(in);
  EXPECT_EQ(manifest["rows"], 8);
  EXPECT_EQ(manifest["n_c"], 1);
  EXPECT_EQ(manifest["layout"], "cell-interleaved");
  EXPECT_EQ(manifest["matrix"], "case.mtx");
  EXPECT_EQ(manifest["nx"], 2);
  std::filesystem::remove_all(dir);
}
