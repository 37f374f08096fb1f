#include <gtest/gtest.h>

#include <cmath>

#include "dln/linalg.hpp"
#include "dln/random.hpp"

using dln::DenseMatrix;

namespace {

DenseMatrix gaussian(std::size_t m, std::size_t n, dln::Rng& rng) {
  DenseMatrix a(m, n);
  for (double& v : a.data()) v = rng.normal();
  return a;
}

double rel_reconstruction(const DenseMatrix& a, const dln::SvdResult& s) {
  return dln::frobenius_norm(dln::reconstruct(s) - a) / std::max(dln::frobenius_norm(a), 1e-300);
}

}  // namespace

TEST(Svd, TwoByTwoClosedForm) {
  // A^T A = [[25, 20], [20, 25]] has eigenvalues 45 and 5.
  const DenseMatrix a{{3, 0}, {4, 5}};
  const auto s = dln::svd(a);
  ASSERT_EQ(s.S.size(), 2u);
  EXPECT_NEAR(s.S[0], 3.0 * std::sqrt(5.0), 1e-14);
  EXPECT_NEAR(s.S[1], std::sqrt(5.0), 1e-14);
  EXPECT_LT(rel_reconstruction(a, s), 1e-15);
}

TEST(Svd, DiagonalInputIsSortedDescending) {
  const DenseMatrix a{{1, 0, 0}, {0, 3, 0}, {0, 0, 2}};
  const auto s = dln::svd(a);
  EXPECT_DOUBLE_EQ(s.S[0], 3.0);
  EXPECT_DOUBLE_EQ(s.S[1], 2.0);
  EXPECT_DOUBLE_EQ(s.S[2], 1.0);
  EXPECT_DOUBLE_EQ(s.U(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(s.V(1, 0), 1.0);
}

TEST(Svd, SignConventionLargestEntryPositive) {
  dln::Rng rng(4);
  const DenseMatrix a = gaussian(7, 5, rng);
  const auto s = dln::svd(a);
  for (std::size_t j = 0; j < s.U.cols(); ++j) {
    std::size_t arg = 0;
    for (std::size_t i = 0; i < s.U.rows(); ++i)
      if (std::abs(s.U(i, j)) > std::abs(s.U(arg, j))) arg = i;
    EXPECT_GT(s.U(arg, j), 0.0);
  }
}

TEST(Svd, WideAndTallAgree) {
  dln::Rng rng(5);
  const DenseMatrix a = gaussian(4, 9, rng);
  const auto s = dln::svd(a);
  const auto st = dln::svd(dln::transpose(a));
  ASSERT_EQ(s.S.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(s.S[i], st.S[i], 1e-12);
  EXPECT_EQ(s.U.rows(), 4u);
  EXPECT_EQ(s.V.rows(), 9u);
  EXPECT_LT(rel_reconstruction(a, s), 1e-13);
}

TEST(Svd, RankDeficientGetsOrthonormalCompletion) {
  // Rank one: u v^T.
  DenseMatrix a(6, 4, 0.0);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 4; ++j) a(i, j) = static_cast<double>(i + 1) * static_cast<double>(j + 1);
  const auto s = dln::svd(a);
  EXPECT_GT(s.S[0], 1.0);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_LT(s.S[i], 1e-12);
  EXPECT_LT(dln::orthonormality_residual(s.U), 1e-12);
  EXPECT_LT(dln::orthonormality_residual(s.V), 1e-12);
}

TEST(Svd, ZeroMatrix) {
  const DenseMatrix a(3, 3, 0.0);
  const auto s = dln::svd(a);
  for (double v : s.S) EXPECT_EQ(v, 0.0);
  EXPECT_LT(dln::orthonormality_residual(s.U), 1e-14);
}

TEST(Svd, RejectsNonFinite) {
  DenseMatrix a(2, 2, 1.0);
  a(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(dln::svd(a), dln::ContractViolation);
}

TEST(Svd, RandomBatteryOrthonormalityAndReconstruction) {
  dln::Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 1 + rng.below(40), n = 1 + rng.below(40);
    const DenseMatrix a = gaussian(m, n, rng);
    const auto s = dln::svd(a);
    EXPECT_LE(dln::orthonormality_residual(s.U), 1e-10);
    EXPECT_LE(dln::orthonormality_residual(s.V), 1e-10);
    EXPECT_LE(rel_reconstruction(a, s), 1e-8);
    for (std::size_t i = 1; i < s.S.size(); ++i) EXPECT_GE(s.S[i - 1], s.S[i]);
  }
}

TEST(Svd, SingularValuesOnlyMatchesFull) {
  dln::Rng rng(3);
  const DenseMatrix a = gaussian(12, 8, rng);
  const auto full = dln::svd(a);
  const auto sv = dln::singular_values(a);
  for (std::size_t i = 0; i < sv.size(); ++i) EXPECT_NEAR(sv[i], full.S[i], 1e-12);
}

TEST(Svd, TruncatedKeepsLeadingTriplets) {
  dln::Rng rng(8);
  const DenseMatrix a = gaussian(10, 10, rng);
  const auto t = dln::truncated_svd(a, 3);
  EXPECT_EQ(t.U.cols(), 3u);
  EXPECT_EQ(t.V.cols(), 3u);
  EXPECT_EQ(t.S.size(), 3u);
  // Eckart-Young: the residual's Frobenius norm is the tail of the spectrum.
  const auto full = dln::singular_values(a);
  double tail = 0.0;
  for (std::size_t i = 3; i < full.size(); ++i) tail += full[i] * full[i];
  EXPECT_NEAR(dln::frobenius_norm_sq(a - dln::reconstruct(t)), tail, 1e-10);
  EXPECT_THROW(dln::truncated_svd(a, 11), dln::ContractViolation);
}

TEST(Qr, ReconstructsAndIsOrthonormal) {
  dln::Rng rng(21);
  const DenseMatrix a = gaussian(9, 4, rng);
  const auto qr = dln::householder_qr(a);
  EXPECT_EQ(qr.Q.rows(), 9u);
  EXPECT_EQ(qr.Q.cols(), 4u);
  EXPECT_LT(dln::orthonormality_residual(qr.Q), 1e-13);
  EXPECT_LT(dln::max_abs(dln::matmul(qr.Q, qr.R) - a), 1e-13);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < i; ++j) EXPECT_EQ(qr.R(i, j), 0.0);
}

TEST(Qr, RequiresTall) {
  EXPECT_THROW(dln::householder_qr(DenseMatrix(2, 3, 1.0)), dln::ContractViolation);
}

TEST(SampleOrthogonal, IsOrthogonalAndSeeded) {
  dln::Rng r1(11), r2(11);
  const DenseMatrix q1 = dln::sample_orthogonal(30, r1);
  const DenseMatrix q2 = dln::sample_orthogonal(30, r2);
  EXPECT_EQ(q1, q2);
  EXPECT_LT(dln::orthonormality_residual(q1), 1e-13);
  EXPECT_LT(dln::orthonormality_residual(dln::transpose(q1)), 1e-13);
}

TEST(SampleOrthogonal, FirstEntryIsUnbiased) {
  // Haar measure: E[Q_00] = 0 and E[Q_00^2] = 1/n.
  dln::Rng rng(99);
  const std::size_t n = 5, trials = 4000;
  double mean = 0.0, second = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const DenseMatrix q = dln::sample_orthogonal(n, rng);
    mean += q(0, 0);
    second += q(0, 0) * q(0, 0);
  }
  mean /= trials;
  second /= trials;
  EXPECT_NEAR(mean, 0.0, 4.0 * std::sqrt(1.0 / n / trials));
  EXPECT_NEAR(second, 1.0 / n, 0.02);
}

TEST(SolveSpd, KnownSystem) {
  // [[4, 2], [2, 3]] x = [2, 1] has x = [0.5, 0].
  const auto x = dln::solve_spd(DenseMatrix{{4, 2}, {2, 3}}, {2, 1});
  EXPECT_NEAR(x[0], 0.5, 1e-15);
  EXPECT_NEAR(x[1], 0.0, 1e-15);
}

TEST(SolveSpd, DampingMakesSingularSolvable) {
  const auto x = dln::solve_spd(DenseMatrix(2, 2, 0.0), {0, 0}, 1e-10);
  EXPECT_EQ(x[0], 0.0);
  EXPECT_THROW(dln::solve_spd(DenseMatrix{{1, 0}, {0, -1}}, {1, 1}), dln::NumericalError);
}
