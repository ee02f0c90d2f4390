#include <gtest/gtest.h>

#include "luders/error.hpp"
#include "luders/matrix.hpp"
#include "test_util.hpp"

using namespace luders;

TEST(ComplexMatrix, ShapeAndEntries) {
  const ComplexMatrix m{{1.0, {2.0, 1.0}}, {3.0, 4.0}, {5.0, 6.0}};
  EXPECT_EQ(m.rows(), 3u);
  EXPECT_EQ(m.cols(), 2u);
  EXPECT_EQ(m.entries().size(), 6u);
  EXPECT_EQ(m(0, 1), Complex(2.0, 1.0));
  EXPECT_EQ(m.transpose()(1, 0), Complex(2.0, 1.0));
  EXPECT_EQ(m.adjoint()(1, 0), Complex(2.0, -1.0));
}

TEST(ComplexMatrix, EntryCountMustMatchShape) {
  EXPECT_THROW(ComplexMatrix(2, 2, std::vector<Complex>(3)), Error);
}

TEST(ComplexMatrix, ProductRejectsMismatchedShapes) {
  try {
    (void)(ComplexMatrix(2, 3) * ComplexMatrix(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(ComplexMatrix, Product) {
  const ComplexMatrix a{{1.0, 2.0}, {0.0, {0.0, 1.0}}};
  const ComplexMatrix b{{0.0, 1.0}, {1.0, 0.0}};
  const ComplexMatrix c = a * b;
  EXPECT_EQ(c(0, 0), Complex(2.0));
  EXPECT_EQ(c(0, 1), Complex(1.0));
  EXPECT_EQ(c(1, 0), Complex(0.0, 1.0));
  EXPECT_EQ(c(1, 1), Complex(0.0));
}

TEST(ComplexMatrix, HermitianTolerance) {
  ComplexMatrix m = ComplexMatrix::identity(3);
  m(0, 1) = {0.0, 1.0};
  m(1, 0) = {0.0, -1.0};
  EXPECT_TRUE(is_hermitian(m));
  m(1, 0) += 1e-11;
  EXPECT_FALSE(is_hermitian(m));
  EXPECT_TRUE(is_hermitian(m, 1e-10));
}

TEST(Kron, AssociativeAndTraceMultiplicative) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix a = test::random_matrix(2, 2, rng);
    const ComplexMatrix b = test::random_matrix(3, 3, rng);
    const ComplexMatrix c = test::random_matrix(2, 2, rng);
    EXPECT_LE(max_abs_diff(kron(kron(a, b), c), kron(a, kron(b, c))), 1e-12);
    EXPECT_LE(std::abs(kron(a, b).trace() - a.trace() * b.trace()), 1e-12);
  }
}

TEST(Kron, IndexConvention) {
  const ComplexMatrix a{{1.0, 2.0}, {3.0, 4.0}};
  const ComplexMatrix b{{0.0, 1.0}, {1.0, 0.0}};
  const ComplexMatrix k = kron(a, b);
  // (a, b) -> a * dim_b + b
  EXPECT_EQ(k(0, 3), Complex(2.0));
  EXPECT_EQ(k(3, 0), Complex(3.0));
  EXPECT_EQ(k(2, 3), Complex(4.0));
  EXPECT_EQ(k(2, 2), Complex(0.0));
  EXPECT_EQ(k(2, 1), Complex(3.0));
}

TEST(Outer, RankOne) {
  const std::vector<Complex> a{1.0, {0.0, 1.0}};
  const ComplexMatrix m = outer(a, a);
  EXPECT_EQ(m(0, 1), Complex(0.0, -1.0));
  EXPECT_EQ(m(1, 0), Complex(0.0, 1.0));
  EXPECT_EQ(m.trace(), Complex(2.0));
}

TEST(Unitary, Detects) {
  const double s = 1.0 / std::sqrt(2.0);
  const ComplexMatrix h{{s, s}, {s, -s}};
  EXPECT_TRUE(is_unitary(h));
  EXPECT_FALSE(is_unitary(h * Complex(1.01)));
}
