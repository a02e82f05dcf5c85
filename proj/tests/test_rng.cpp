#include <gtest/gtest.h>

#include <cmath>

#include "bqc/rng.hpp"

namespace {

TEST(Rng, SplitMix64ReferenceOutputs) {
  // Published SplitMix64 outputs for seed 0.
  std::uint64_t s = 0;
  EXPECT_EQ(bqc::splitmix64_next(s), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(bqc::splitmix64_next(s), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(bqc::splitmix64_next(s), 0x06c45d188009454fULL);
}

TEST(Rng, SameSeedSameStream) {
  bqc::Xoshiro256pp a(99), b(99), c(100);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a.next();
    EXPECT_EQ(va, b.next());
    differs |= va != c.next();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, DerivedSeedsAreDistinctPerRun) {
  EXPECT_NE(bqc::derive_seed(42, 0), bqc::derive_seed(42, 1));
  EXPECT_EQ(bqc::derive_seed(42, 7), bqc::derive_seed(42, 7));
}

TEST(Rng, UniformIndexStaysInRange) {
  bqc::Xoshiro256pp rng(3);
  std::array<int, 7> hits{};
  for (int i = 0; i < 70000; ++i) ++hits[rng.uniform_index(7)];
  for (int h : hits) EXPECT_NEAR(h, 10000, 500);
}

TEST(Rng, NormalMomentsMatch) {
  bqc::Xoshiro256pp rng(11);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal(3.0, 2.0);
    s += z;
    s2 += z * z;
  }
  const double m = s / n;
  const double var = s2 / n - m * m;
  EXPECT_NEAR(m, 3.0, 3 * 2.0 / std::sqrt(n));
  EXPECT_NEAR(var, 4.0, 0.05 * 4.0);
}

}  // namespace
