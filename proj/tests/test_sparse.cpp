#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using msp::CsrMatrix;
using msp::Index;

namespace {

CsrMatrix two_by_two(double a, double b, double c, double d) {
  return CsrMatrix::from_triplets(2, 2, {{0, 0, a}, {0, 1, b}, {1, 0, c}, {1, 1, d}});
}

std::vector<Index> random_perm(Index n, std::mt19937_64& rng) {
  auto p = oracle::iota(n);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

}  // namespace

TEST(Csr, FromTripletsSortsSumsAndDropsZeros) {
  const auto a = CsrMatrix::from_triplets(2, 3, {{1, 2, 1.0}, {0, 1, 2.0}, {1, 0, 3.0}, {1, 2, 4.0}, {0, 0, 0.0}});
  EXPECT_EQ(a.nnz(), 3u);
  EXPECT_EQ(std::vector<Index>(a.row_offsets().begin(), a.row_offsets().end()), (std::vector<Index>{0, 1, 3}));
  EXPECT_EQ(std::vector<Index>(a.col_indices().begin(), a.col_indices().end()), (std::vector<Index>{1, 0, 2}));
  EXPECT_DOUBLE_EQ(a.at(1, 2), 5.0);
  EXPECT_DOUBLE_EQ(a.at(0, 0), 0.0);
  EXPECT_FALSE(a.find(0, 0).has_value());

  const auto kept = CsrMatrix::from_triplets(1, 1, {{0, 0, 0.0}}, msp::DuplicatePolicy::Sum, true);
  EXPECT_EQ(kept.nnz(), 1u);
}

TEST(Csr, RejectsDuplicatesAndBadIndices) {
  EXPECT_THROW((void)CsrMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 0, 1.0}}, msp::DuplicatePolicy::Reject),
               msp::InvalidArgument);
  EXPECT_THROW((void)CsrMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), msp::DimensionError);
  EXPECT_THROW(CsrMatrix(2, 2, {0, 1}, {0}, {1.0}), msp::InvalidArgument);
  EXPECT_THROW(CsrMatrix(1, 2, {0, 2}, {1, 0}, {1.0, 1.0}), msp::InvalidArgument);
  EXPECT_THROW(CsrMatrix(1, 2, {0, 2}, {0, 0}, {1.0, 1.0}), msp::InvalidArgument);
  EXPECT_THROW(CsrMatrix(1, 2, {0, 1}, {2}, {1.0}), msp::InvalidArgument);
}

TEST(Spmv, IdentityAndHandExample) {
  const std::vector<double> x{1, 2, 3};
  EXPECT_EQ(msp::spmv(CsrMatrix::identity(3), x), x);
  EXPECT_EQ(msp::spmv(two_by_two(2, 1, 1, 2), std::vector<double>{1, 1}), (std::vector<double>{3, 3}));
}

TEST(Spmv, MatchesDenseProduct) {
  std::mt19937_64 rng(11);
  const auto a = oracle::random_sparse(50, 0.1, rng);
  const auto x = oracle::random_vector(50, rng);
  const auto y = msp::spmv(a, x);
  const oracle::Vec ref = oracle::dense(a) * oracle::vec(x);
  EXPECT_LE((oracle::vec(y) - ref).norm(), 1e-13 * ref.norm());
}

TEST(Spmv, DimensionMismatchThrows) {
  EXPECT_THROW((void)msp::spmv(CsrMatrix::identity(3), std::vector<double>{1, 2}), msp::DimensionError);
}

TEST(Spmv, IndependentOfThreadCount) {
  std::mt19937_64 rng(12);
  const auto a = oracle::random_sparse(400, 0.05, rng);
  const auto x = oracle::random_vector(400, rng);
  std::vector<double> y1, y8;
  {
    msp::parallel::ScopedThreads t(1);
    y1 = msp::spmv(a, x);
  }
  {
    msp::parallel::ScopedThreads t(8);
    y8 = msp::spmv(a, x);
  }
  EXPECT_EQ(y1, y8);
}

TEST(Transpose, HandAndDenseOracle) {
  const auto upper = CsrMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 5.0}, {1, 1, 2.0}});
  EXPECT_EQ(msp::transpose_pattern(upper), CsrMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {1, 0, 5.0}, {1, 1, 2.0}}));

  const auto sym = two_by_two(2, 1, 1, 2);
  EXPECT_TRUE(msp::transpose_pattern(sym).same_pattern(sym));

  std::mt19937_64 rng(13);
  const auto a = oracle::random_sparse(30, 0.15, rng);
  EXPECT_EQ(oracle::dense(msp::transpose_pattern(a)), oracle::dense(a).transpose());
  EXPECT_EQ(msp::transpose_pattern(msp::transpose_pattern(a)), a);
}

TEST(Transpose, Rectangular) {
  const auto a = CsrMatrix::from_triplets(2, 3, {{0, 2, 1.0}, {1, 0, 2.0}});
  const auto t = msp::transpose_pattern(a);
  EXPECT_EQ(t.nrows(), 3u);
  EXPECT_EQ(t.ncols(), 2u);
  EXPECT_EQ(oracle::dense(t), oracle::dense(a).transpose());
}

TEST(Permute, IdentityAndSwap) {
  const auto a = two_by_two(1, 2, 3, 4);
  EXPECT_EQ(msp::permute(a, std::vector<Index>{0, 1}), a);
  EXPECT_EQ(msp::permute(a, std::vector<Index>{1, 0}), two_by_two(4, 3, 2, 1));
}

TEST(Permute, RoundTripAndDenseOracle) {
  std::mt19937_64 rng(14);
  const auto a = oracle::random_sparse(20, 0.2, rng);
  const auto p = random_perm(20, rng);
  const auto pa = msp::permute(a, p);
  EXPECT_EQ(msp::permute(pa, msp::inverse_permutation(p)), a);

  oracle::Mat pm = oracle::Mat::Zero(20, 20);
  for (Index i = 0; i < 20; ++i) pm(p[i], i) = 1.0;
  EXPECT_EQ(oracle::dense(pa), pm * oracle::dense(a) * pm.transpose());
}

TEST(Permute, RejectsNonBijection) {
  EXPECT_THROW((void)msp::permute(CsrMatrix::identity(3), std::vector<Index>{0, 0, 1}), msp::InvalidArgument);
  EXPECT_THROW((void)msp::permute(CsrMatrix::identity(3), std::vector<Index>{0, 1}), msp::DimensionError);
  EXPECT_FALSE(msp::is_permutation(std::vector<Index>{0, 3, 1}));
}

TEST(Permute, CommutesWithSpmv) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 5 + trial * 7;
    const auto a = oracle::random_sparse(n, 0.2, rng);
    const auto x = oracle::random_vector(n, rng);
    const auto p = random_perm(n, rng);
    const auto lhs = msp::spmv(msp::permute(a, p), msp::permute_vector(x, p));
    const auto rhs = msp::permute_vector(msp::spmv(a, x), p);
    for (Index i = 0; i < n; ++i) EXPECT_NEAR(lhs[i], rhs[i], 1e-14 * (1.0 + std::abs(rhs[i])));
  }
}

TEST(Submatrix, ExtractsRowsAndColumns) {
  const auto a = CsrMatrix::from_triplets(3, 3, {{0, 0, 1}, {0, 2, 2}, {1, 1, 3}, {2, 0, 4}, {2, 2, 5}});
  const auto s = msp::extract_submatrix(a, std::vector<Index>{2, 0}, std::vector<Index>{0, 2});
  EXPECT_EQ(oracle::dense(s), (oracle::Mat(2, 2) << 4, 5, 1, 2).finished());
}

TEST(DenseSolve, HandExamples) {
  const auto f = msp::dense_factorize(CsrMatrix::from_triplets(2, 2, {{0, 0, 2.0}, {1, 1, 4.0}}));
  EXPECT_EQ(msp::dense_solve(f, std::vector<double>{2, 4}), (std::vector<double>{1, 1}));
  const std::vector<double> b{3, -1, 4, 1, 5};
  EXPECT_EQ(msp::dense_solve(msp::dense_factorize(CsrMatrix::identity(5)), b), b);
}

TEST(DenseSolve, RandomSpdResidual) {
  std::mt19937_64 rng(16);
  oracle::Mat m = oracle::Mat::Random(20, 20);
  const oracle::Mat spd = m * m.transpose() + 20.0 * oracle::Mat::Identity(20, 20);
  const auto a = oracle::sparse(spd);
  const auto b = oracle::random_vector(20, rng);
  const auto x = msp::dense_solve(msp::dense_factorize(a), b);
  EXPECT_LE((spd * oracle::vec(x) - oracle::vec(b)).norm(), 1e-10 * oracle::vec(b).norm());
}

TEST(DenseSolve, NeedsPivoting) {
  const auto a = CsrMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}});
  EXPECT_EQ(msp::dense_solve(msp::dense_factorize(a), std::vector<double>{2, 3}), (std::vector<double>{3, 2}));
}

TEST(DenseSolve, IllConditionedResidual) {
  std::mt19937_64 rng(17);
  for (double decades : {6.0, 8.0}) {
    const oracle::Mat q = oracle::Mat::Random(12, 12).householderQr().householderQ();
    oracle::Vec s = oracle::Vec::LinSpaced(12, 0.0, -decades);
    for (auto& v : s) v = std::pow(10.0, v);
    const oracle::Mat a = q * s.asDiagonal() * q.transpose();
    const auto b = oracle::random_vector(12, rng);
    const auto x = msp::dense_solve(msp::dense_factorize(oracle::sparse(a)), b);
    const double ours = (a * oracle::vec(x) - oracle::vec(b)).norm() / oracle::vec(b).norm();
    const double ref = (a * a.partialPivLu().solve(oracle::vec(b)) - oracle::vec(b)).norm() / oracle::vec(b).norm();
    if (decades <= 6.0) EXPECT_LE(ours, 1e-10);
    // At cond 1e8 the attainable residual is ~eps·cond; match a reference LU.
    EXPECT_LE(ours, std::max(1e-10, 4.0 * ref)) << "cond 1e" << decades;
  }
}

TEST(DenseSolve, SingularThrowsWithStep) {
  const auto a = CsrMatrix::from_triplets(3, 3, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 2.0}, {1, 1, 4.0}, {2, 2, 1.0}});
  try {
    (void)msp::dense_factorize(a);
    FAIL() << "expected SingularMatrixError";
  } catch (const msp::SingularMatrixError& e) {
    EXPECT_EQ(e.location(), 1u);
  }
  EXPECT_THROW((void)msp::dense_factorize(CsrMatrix::from_triplets(2, 3, {{0, 0, 1.0}})), msp::DimensionError);
}

TEST(DenseSolve, InverseReconstruction) {
  std::mt19937_64 rng(18);
  const auto a = oracle::random_sparse(15, 0.3, rng);
  const auto inv = msp::dense_factorize(a).inverse();
  oracle::Mat ours(15, 15);
  for (Index i = 0; i < 15; ++i)
    for (Index j = 0; j < 15; ++j) ours(i, j) = inv(i, j);
  const oracle::Mat ref = oracle::dense(a).inverse();
  EXPECT_LE((ours - ref).norm(), 1e-12 * ref.norm());
}

TEST(BlockLayout, IndexingAndInterleavePermutation) {
  const msp::BlockLayout inter{3, 2, msp::BlockOrdering::CellInterleaved};
  const msp::BlockLayout seg{3, 2, msp::BlockOrdering::VariableSegregated};
  EXPECT_EQ(inter.index(2, 1), 5u);
  EXPECT_EQ(seg.index(2, 1), 5u);
  EXPECT_EQ(seg.index(1, 0), 1u);
  EXPECT_EQ(seg.index(0, 1), 3u);
  EXPECT_EQ(msp::to_interleaved_permutation(inter), oracle::iota(6));
  EXPECT_EQ(msp::to_interleaved_permutation(seg), (std::vector<Index>{0, 2, 4, 1, 3, 5}));
}
