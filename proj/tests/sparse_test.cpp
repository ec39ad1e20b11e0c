#include <gtest/gtest.h>

#include <limits>
#include <sstream>

#include "ftf/linear_solvers.hpp"
#include "ftf/operators.hpp"
#include "ftf/sparse.hpp"
#include "test_util.hpp"

namespace ftf {
namespace {

using testing::Dense;
using testing::max_abs_diff;

TEST(SparseBuild, IdentityFromTriplets) {
  const Triplet t[] = {{0, 0, 1.0}, {1, 1, 1.0}};
  const auto a = build_sparse(2, 2, t);
  EXPECT_EQ(a, SparseMatrix::identity(2));
  EXPECT_EQ(a.nnz(), 2u);
}

TEST(SparseBuild, SecondDifferenceRow) {
  const Triplet t[] = {{0, 0, 1.0}, {0, 1, -2.0}, {0, 2, 1.0}};
  const auto a = build_sparse(1, 3, t);
  EXPECT_EQ(a, second_difference_matrix(3));
  EXPECT_EQ(a.to_dense(), (Dense{{1, -2, 1}}));
}

TEST(SparseBuild, DuplicatesAreSummed) {
  const Triplet t[] = {{0, 0, 1.0}, {0, 0, 2.0}};
  const auto a = build_sparse(2, 2, t);
  EXPECT_EQ(a.nnz(), 1u);
  EXPECT_EQ(a.coeff(0, 0), 3.0);
}

TEST(SparseBuild, CancellingDuplicatesAreDropped) {
  const Triplet t[] = {{1, 0, 1.5}, {1, 0, -1.5}, {0, 1, 0.0}};
  EXPECT_EQ(build_sparse(2, 2, t).nnz(), 0u);
}

TEST(SparseBuild, RejectsBadInput) {
  const Triplet out_of_range[] = {{2, 0, 1.0}};
  EXPECT_THROW(build_sparse(2, 2, out_of_range), ConstructionError);
  const Triplet non_finite[] = {{0, 0, std::numeric_limits<double>::infinity()}};
  EXPECT_THROW(build_sparse(2, 2, non_finite), ConstructionError);
  const Triplet nan[] = {{0, 0, std::numeric_limits<double>::quiet_NaN()}};
  EXPECT_THROW(build_sparse(2, 2, nan), ConstructionError);
}

TEST(SparseMatvec, Examples) {
  EXPECT_EQ(matvec(SparseMatrix::identity(2), Vector{3, -1}), (Vector{3, -1}));
  EXPECT_EQ(matvec(second_difference_matrix(3), Vector{0, 1, 0}), (Vector{-2}));
  EXPECT_EQ(matvec(first_difference_matrix(5), Vector{1, 2, 3, 4, 5}), (Vector{-1, -1, -1, -1}));
  EXPECT_THROW(matvec(SparseMatrix::identity(2), Vector{1, 2, 3}), DimensionError);
}

TEST(SparseMatvec, TransposeExamples) {
  const Vector v{0.5, -4, 7};
  EXPECT_EQ(matvec_transpose(SparseMatrix::identity(3), v), v);
  EXPECT_EQ(matvec_transpose(second_difference_matrix(3), Vector{1}), (Vector{1, -2, 1}));
  EXPECT_THROW(matvec_transpose(SparseMatrix::identity(2), Vector{1}), DimensionError);
}

TEST(SparseMatvec, AlphaBetaUpdate) {
  const auto d = first_difference_matrix(3);
  Vector out{10, 20};
  d.multiply(Vector{1, 4, 9}, out, 2.0, 1.0);
  EXPECT_EQ(out, (Vector{10 - 6, 20 - 10}));
}

TEST(SparseMatvec, AdjointConsistency) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t r = 1 + rng() % 50, c = 1 + rng() % 50;
    const auto a = testing::random_sparse(rng, r, c, 0.2);
    const auto x = testing::random_vector(rng, c), y = testing::random_vector(rng, r);
    const double lhs = dot(matvec(a, x), y), rhs = dot(x, matvec_transpose(a, y));
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(SparseMatvec, IncidenceColumnSumsOverEdgesVanish) {
  const auto d = first_difference_matrix(6);
  const Vector ones(d.rows(), 1.0);
  const auto s = matvec_transpose(d, ones);
  EXPECT_EQ(s.front(), 1.0);
  EXPECT_EQ(s.back(), -1.0);
  // Each row of an incidence matrix holds one +1 and one -1.
  for (double v : d.row_sums()) EXPECT_EQ(v, 0.0);
}

TEST(SparseKron, IdentityLeftIsBlockDiagonal) {
  const Triplet t[] = {{0, 0, 1.0}, {0, 1, 2.0}, {1, 1, -3.0}};
  const auto a = build_sparse(2, 2, t);
  EXPECT_EQ(kron(SparseMatrix::identity(2), a).to_dense(),
            (Dense{{1, 2, 0, 0}, {0, -3, 0, 0}, {0, 0, 1, 2}, {0, 0, 0, -3}}));
  EXPECT_EQ(kron(a, SparseMatrix::identity(1)), a);
}

TEST(SparseKron, IndexFormula) {
  std::mt19937_64 rng(5);
  const auto a = testing::random_sparse(rng, 3, 2, 0.7), b = testing::random_sparse(rng, 2, 4, 0.6);
  const auto k = kron(a, b);
  ASSERT_EQ(k.rows(), 6u);
  ASSERT_EQ(k.cols(), 8u);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t p = 0; p < 2; ++p)
        for (std::size_t q = 0; q < 4; ++q) EXPECT_EQ(k.coeff(i * 2 + p, j * 4 + q), a.coeff(i, j) * b.coeff(p, q));
}

TEST(SparseKron, Associative) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = testing::random_sparse(rng, 1 + rng() % 3, 1 + rng() % 3, 0.6);
    const auto b = testing::random_sparse(rng, 1 + rng() % 3, 1 + rng() % 3, 0.6);
    const auto c = testing::random_sparse(rng, 1 + rng() % 3, 1 + rng() % 3, 0.6);
    const auto lhs = kron(kron(a, b), c), rhs = kron(a, kron(b, c));
    ASSERT_EQ(lhs.rows(), rhs.rows());
    const auto dl = lhs.to_dense(), dr = rhs.to_dense();
    for (std::size_t i = 0; i < dl.size(); ++i) EXPECT_LT(max_abs_diff(dl[i], dr[i]), 1e-14);
  }
}

TEST(SparseKron, StackedSecondDifferencesMatchKroneckerTrendOperator) {
  const auto i3 = SparseMatrix::identity(3), i4 = SparseMatrix::identity(4);
  const SparseMatrix parts[] = {kron(i4, second_difference_matrix(3)), kron(second_difference_matrix(4), i3)};
  const auto k = vstack(parts);
  ASSERT_EQ(k.rows(), 10u);
  ASSERT_EQ(k.cols(), 12u);
  // The trend operator uses the negated stencil (-1, 2, -1).
  const auto expected = kronecker_trend_matrix(LatticeSpec(3, 4));
  EXPECT_EQ(k.to_dense().size(), expected.to_dense().size());
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 12; ++j) EXPECT_EQ(k.coeff(i, j), -expected.coeff(i, j));
}

TEST(SparseUtilities, TransposeAndProducts) {
  std::mt19937_64 rng(9);
  const auto a = testing::random_sparse(rng, 7, 5, 0.4);
  EXPECT_EQ(a.transposed().transposed(), a);
  const auto g = gram(a);
  const auto p = multiply(a.transposed(), a);
  const auto dg = g.to_dense(), dp = p.to_dense();
  for (std::size_t i = 0; i < 5; ++i) EXPECT_LT(max_abs_diff(dg[i], dp[i]), 1e-13);
  const Vector w{1, 2, 0, 3, 1, 0.5, 2};
  const auto wg = weighted_gram(a, w);
  const auto x = testing::random_vector(rng, 5);
  Vector ax = matvec(a, x);
  for (std::size_t i = 0; i < ax.size(); ++i) ax[i] *= w[i];
  EXPECT_LT(max_abs_diff(matvec(wg, x), matvec_transpose(a, ax)), 1e-12);
}

TEST(SparseUtilities, VstackChecksColumns) {
  const SparseMatrix bad[] = {SparseMatrix::identity(2), SparseMatrix::identity(3)};
  EXPECT_THROW(vstack(bad), DimensionError);
}

TEST(SparseUtilities, TripletDump) {
  const Triplet t[] = {{0, 1, 0.1}, {2, 0, -3.0}};
  std::ostringstream os;
  dump_triplets(os, build_sparse(3, 2, t));
  EXPECT_EQ(os.str(), "0 1 0.10000000000000001\n2 0 -3\n");
}

TEST(SparseUtilities, FormatRealRoundTrips) {
  for (double v : {0.1, -2.5e-300, 1.0 / 3.0, 123456789.125, 0.0}) {
    const auto s = format_real(v);
    EXPECT_EQ(std::stod(s), v) << s;
  }
}

TEST(SparseUtilities, TouchCounter) {
  const auto d = first_difference_matrix(10);
  const auto before = nonzero_touches();
  matvec(d, Vector(10, 1.0));
  matvec_transpose(d, Vector(9, 1.0));
  EXPECT_EQ(nonzero_touches() - before, 2 * d.nnz());
}

}  // namespace
}  // namespace ftf
