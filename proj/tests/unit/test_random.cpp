#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "dln/random.hpp"

TEST(SplitMix64, ReferenceSequence) {
  // Reference outputs of splitmix64 seeded with 0.
  std::uint64_t s = 0;
  EXPECT_EQ(dln::splitmix64(s), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(dln::splitmix64(s), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(dln::splitmix64(s), 0x06C45D188009454FULL);
}

TEST(Rng, SameSeedSameStream) {
  dln::Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, SplitIsIndependentOfParentDraws) {
  dln::Rng a(7);
  const dln::Rng child_before = a.split(3);
  for (int i = 0; i < 10; ++i) a.next_u64();
  dln::Rng x = child_before, y = a.split(3);
  EXPECT_EQ(x.next_u64(), y.next_u64());
  dln::Rng z = a.split(4);
  dln::Rng w = a.split(3);
  EXPECT_NE(z.next_u64(), w.next_u64());
}

TEST(Rng, UniformRangeAndMoments) {
  dln::Rng rng(1);
  const int n = 200000;
  double mean = 0.0, var = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    mean += u;
    var += (u - 0.5) * (u - 0.5);
  }
  mean /= n;
  var /= n;
  // Standard error of the mean is sqrt(1/12/n) ~ 6.5e-4.
  EXPECT_NEAR(mean, 0.5, 4e-3);
  EXPECT_NEAR(var, 1.0 / 12.0, 2e-3);
}

TEST(Rng, BelowCoversRangeWithoutOverflow) {
  dln::Rng rng(2);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_EQ(rng.below(1), 0u);
}

TEST(Rng, NormalMoments) {
  dln::Rng rng(3);
  const int n = 200000;
  double m1 = 0.0, m2 = 0.0, m4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  EXPECT_NEAR(m1, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(m2, 1.0, 0.02);
  EXPECT_NEAR(m4, 3.0, 0.1);
}

TEST(Rng, BernoulliRate) {
  dln::Rng rng(5);
  int hits = 0;
  for (int i = 0; i < 100000; ++i) hits += rng.bernoulli(0.3);
  EXPECT_NEAR(hits / 100000.0, 0.3, 0.006);
}
