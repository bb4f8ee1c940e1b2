#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "oracles.hpp"

using msp::CsrMatrix;

namespace {

CsrMatrix parse(const std::string& text) {
  std::istringstream in(text);
  return msp::read_matrix_market(in);
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("msp_test_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(MatrixMarket, ReadsIdentity) {
  EXPECT_EQ(parse("%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 1 1.0\n2 2 1.0\n"),
            CsrMatrix::identity(2));
}

TEST(MatrixMarket, ExpandsSymmetric) {
  const auto a = parse("%%MatrixMarket matrix coordinate real symmetric\n3 3 4\n1 1 4\n2 1 -1\n2 2 4\n3 2 -2\n");
  EXPECT_EQ(oracle::dense(a), (oracle::Mat(3, 3) << 4, -1, 0, -1, 4, -2, 0, -2, 0).finished());
  EXPECT_EQ(a.nnz(), 6u);
}

TEST(MatrixMarket, IntegerFieldAndCaseInsensitiveBanner) {
  const auto a = parse("%%MatrixMarket MATRIX Coordinate INTEGER General\n1 1 1\n1 1 7\n");
  EXPECT_DOUBLE_EQ(a.at(0, 0), 7.0);
}

TEST(MatrixMarket, RejectsMalformedInput) {
  EXPECT_THROW(parse(""), msp::FormatError);
  EXPECT_THROW(parse("%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1\n"), msp::FormatError);
  EXPECT_THROW(parse("%%MatrixMarket matrix array real general\n1 1\n1\n"), msp::FormatError);
  EXPECT_THROW(parse("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n"), msp::FormatError);
  EXPECT_THROW(parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n"), msp::FormatError);
  EXPECT_THROW(parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n0 1 1\n"), msp::FormatError);
  EXPECT_THROW(parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n1 1 2\n"), msp::FormatError);
  EXPECT_THROW(parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n"), msp::FormatError);
  EXPECT_THROW(parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1\n"), msp::FormatError);
  EXPECT_THROW(parse("%%MatrixMarket matrix coordinate real symmetric\n2 3 0\n"), msp::FormatError);
}

TEST(MatrixMarket, RoundTripIsBitExact) {
  std::mt19937_64 rng(21);
  auto a = oracle::random_sparse(40, 0.1, rng);
  for (double& v : a.values_mut()) v *= std::exp(std::uniform_real_distribution<double>(-30, 30)(rng));
  const auto path = temp_file("roundtrip.mtx");
  msp::write_matrix_market(a, path);
  const auto b = msp::read_matrix_market(path);
  std::filesystem::remove(path);
  EXPECT_EQ(a, b);
}

TEST(MatrixMarket, MissingFileIsFormatError) {
  EXPECT_THROW((void)msp::read_matrix_market(temp_file("absent.mtx")), msp::FormatError);
}

TEST(VectorFile, RoundTripAndComments) {
  std::mt19937_64 rng(22);
  const auto v = oracle::random_vector(25, rng, -1e10, 1e10);
  const auto path = temp_file("vec.txt");
  msp::write_vector(v, path);
  EXPECT_EQ(msp::read_vector(path), v);
  {
    std::ofstream out(path);
    out << "% header\n1.5\n\n-2\n";
  }
  EXPECT_EQ(msp::read_vector(path), (std::vector<double>{1.5, -2.0}));
  {
    std::ofstream out(path);
    out << "abc\n";
  }
  EXPECT_THROW((void)msp::read_vector(path), msp::FormatError);
  std::filesystem::remove(path);
}
