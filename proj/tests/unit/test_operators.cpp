#include <gtest/gtest.h>

#include <sstream>

#include "dln/operators.hpp"
#include "dln/random.hpp"

using dln::DenseMatrix;
using dln::Measurement;
using dln::SensingOperator;

namespace {

DenseMatrix gaussian(std::size_t m, std::size_t n, dln::Rng& rng) {
  DenseMatrix a(m, n);
  for (double& v : a.data()) v = rng.normal();
  return a;
}

std::vector<SensingOperator> all_variants(std::size_t rows, std::size_t cols, dln::Rng& rng) {
  std::vector<DenseMatrix> mats;
  for (int i = 0; i < 5; ++i) mats.push_back(gaussian(rows, cols, rng));
  return {SensingOperator::identity(rows, cols), dln::GaussianSensing(mats),
          dln::CompletionMask(rows, cols, {{0, 0}, {1, 2}, {rows - 1, cols - 1}})};
}

}  // namespace

TEST(Operators, IdentityIsRowMajorVec) {
  const DenseMatrix m{{1, 2}, {3, 4}};
  const auto y = dln::apply(SensingOperator::identity(2), m);
  EXPECT_EQ(y.y, (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(dln::adjoint_apply(SensingOperator::identity(2), y), m);
}

TEST(Operators, GaussianInnerProducts) {
  const DenseMatrix a1{{1, 0}, {0, 1}}, a2{{0, 2}, {-1, 0}};
  const SensingOperator op = dln::GaussianSensing({a1, a2});
  const DenseMatrix m{{1, 2}, {3, 4}};
  EXPECT_EQ(dln::apply(op, m).y, (std::vector<double>{5, 1}));
  // A^dagger y = sum y_i A_i.
  EXPECT_EQ(dln::adjoint_apply(op, Measurement{{1, 2}}), (DenseMatrix{{1, 4}, {-2, 1}}));
}

TEST(Operators, MaskSelectsSortedEntries) {
  const dln::CompletionMask mask(2, 3, {{1, 0}, {0, 2}});
  EXPECT_EQ(mask.count(), 2u);
  EXPECT_EQ(mask.entry(0), (dln::CompletionMask::Entry{0, 2}));
  const DenseMatrix m{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(dln::apply(mask, m).y, (std::vector<double>{3, 4}));
  EXPECT_EQ(dln::adjoint_apply(mask, Measurement{{7, 8}}), (DenseMatrix{{0, 0, 7}, {8, 0, 0}}));
}

TEST(Operators, AdjointIdentityHoldsForEveryVariant) {
  dln::Rng rng(12);
  for (const auto& op : all_variants(4, 3, rng)) {
    const DenseMatrix x = gaussian(4, 3, rng);
    Measurement y{std::vector<double>(op.measurements())};
    for (double& v : y.y) v = rng.normal();
    const Measurement ax = dln::apply(op, x);
    double lhs = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) lhs += ax.y[i] * y.y[i];
    EXPECT_NEAR(lhs, dln::inner(x, dln::adjoint_apply(op, y)), 1e-12) << op.kind();
  }
}

TEST(Operators, SurrogateNormalization) {
  const DenseMatrix m{{1, 2}, {3, 4}};
  EXPECT_EQ(dln::surrogate(SensingOperator::identity(2), dln::apply(SensingOperator::identity(2), m)), m);
  const SensingOperator mask = dln::CompletionMask(2, 2, {{0, 0}, {1, 1}});
  EXPECT_EQ(dln::surrogate(mask, dln::apply(mask, m)), (DenseMatrix{{0.5, 0}, {0, 2}}));
  const SensingOperator g = dln::GaussianSensing({DenseMatrix{{1, 0}, {0, 0}}, DenseMatrix{{0, 0}, {0, 1}}});
  EXPECT_EQ(dln::surrogate(g, dln::apply(g, m)), (DenseMatrix{{0.5, 0}, {0, 2}}));
}

TEST(Operators, ShapeContracts) {
  EXPECT_THROW(dln::apply(SensingOperator::identity(3), DenseMatrix(2, 2)), dln::ContractViolation);
  EXPECT_THROW(dln::adjoint_apply(SensingOperator::identity(2), Measurement{{1}}), dln::ContractViolation);
  EXPECT_THROW(dln::CompletionMask(2, 2, {{2, 0}}), dln::ContractViolation);
  EXPECT_THROW(dln::CompletionMask(2, 2, {{1, 1}, {1, 1}}), dln::ContractViolation);
  EXPECT_THROW(dln::GaussianSensing(2, 2, std::vector<double>(5)), dln::ContractViolation);
  EXPECT_THROW(dln::GaussianSensing(std::vector<DenseMatrix>{}), dln::ContractViolation);
}

TEST(Operators, KindAndCounts) {
  dln::Rng rng(1);
  const auto ops = all_variants(3, 4, rng);
  EXPECT_STREQ(ops[0].kind(), "identity");
  EXPECT_STREQ(ops[1].kind(), "gaussian");
  EXPECT_STREQ(ops[2].kind(), "mask");
  EXPECT_EQ(ops[0].measurements(), 12u);
  EXPECT_EQ(ops[1].measurements(), 5u);
  EXPECT_EQ(ops[2].measurements(), 3u);
  for (const auto& op : ops) {
    EXPECT_EQ(op.rows(), 3u);
    EXPECT_EQ(op.cols(), 4u);
  }
}

TEST(Operators, MaskCsvRoundTrip) {
  const dln::CompletionMask mask(3, 3, {{2, 1}, {0, 0}, {1, 2}});
  std::stringstream ss;
  dln::write_mask_csv(mask, ss);
  EXPECT_EQ(ss.str(), "row,col\n0,0\n1,2\n2,1\n");
  EXPECT_EQ(dln::read_mask_csv(ss, 3, 3), mask);
  std::stringstream bad("row,col\n0,0\n5,1\n");
  EXPECT_ANY_THROW(dln::read_mask_csv(bad, 3, 3));
}
