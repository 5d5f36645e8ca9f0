#include <gtest/gtest.h>

#include <set>

#include "alsim/common.hpp"

using namespace alsim;

TEST(Seeds, DeriveIsStableAndOrderSensitive) {
  EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_NE(derive_seed(1, {2}), derive_seed(2, {2}));
  static_assert(derive_seed(7, {1}) == derive_seed(7, {1}));
}

TEST(Seeds, HashTagIsFnv1a) {
  // FNV-1a 64 of "a" from the reference tables.
  EXPECT_EQ(hash_tag("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hash_tag(""), 0xcbf29ce484222325ULL);
}

TEST(Seeds, HashUniformInUnitInterval) {
  double sum = 0;
  for (std::uint64_t k = 0; k < 10000; ++k) {
    const double u = hash_uniform(k);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 10000, 0.5, 0.01);
}

TEST(Sampling, WithoutReplacementIsDistinctAndSeeded) {
  std::vector<int> pop(100);
  std::iota(pop.begin(), pop.end(), 0);
  const auto a = sample_without_replacement(pop, 30, 5);
  const auto b = sample_without_replacement(pop, 30, 5);
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::set<int>(a.begin(), a.end()).size(), 30u);
  EXPECT_NE(a, sample_without_replacement(pop, 30, 6));
  EXPECT_THROW(sample_without_replacement(pop, 101, 5), precondition_error);
}

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_DOUBLE_EQ(sigmoid(0), 0.5);
  EXPECT_EQ(sigmoid(-1000), 0.0);
  EXPECT_EQ(sigmoid(1000), 1.0);
  EXPECT_NEAR(sigmoid(2) + sigmoid(-2), 1.0, 1e-15);
}
