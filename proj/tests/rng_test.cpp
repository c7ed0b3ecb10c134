// Copyright 2026 The ldpfed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ldpfed/rng.hpp"

#include <algorithm>
#include <set>
#include <vector>

#include <gtest/gtest.h>

namespace ldpfed {
namespace {

TEST(DeriveSeed, DistinctAcrossTagsAndIndices) {
  std::set<uint64_t> seen;
  for (uint64_t tag = 1; tag <= 6; ++tag)
    for (uint64_t round = 0; round < 20; ++round)
      for (uint64_t actor = 0; actor < 20; ++actor)
        seen.insert(derive_seed(42, {tag, round, actor}));
  EXPECT_EQ(seen.size(), 6u * 20u * 20u);
}

TEST(DeriveSeed, DependsOnEveryComponent) {
  uint64_t base = derive_seed(1, {2, 3});
  EXPECT_NE(base, derive_seed(2, {2, 3}));
  EXPECT_NE(base, derive_seed(1, {3, 3}));
  EXPECT_NE(base, derive_seed(1, {2, 4}));
  EXPECT_NE(base, derive_seed(1, {2}));
}

TEST(Stream, DeterministicGivenSeed) {
  Stream a(123), b(123);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.bits(), b.bits());
}

TEST(Stream, UnitInHalfOpenInterval) {
  Stream s(7);
  double mean = 0.0;
  for (int i = 0; i < 100000; ++i) {
    double u = s.unit();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    mean += u;
  }
  mean /= 100000;
  EXPECT_NEAR(mean, 0.5, 0.005);
}

TEST(Stream, BelowIsUnbiased) {
  Stream s(9);
  const uint64_t n = 5;
  std::vector<int> counts(n, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    uint64_t v = s.below(n);
    ASSERT_LT(v, n);
    ++counts[v];
  }
  for (uint64_t v = 0; v < n; ++v)
    EXPECT_NEAR(counts[v] / static_cast<double>(draws), 0.2, 0.01);
}

TEST(Stream, GaussianMomentsMatch) {
  Stream s(11);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double g = s.gaussian();
    sum += g;
    sq += g * g;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Stream, ShuffleIsAPermutation) {
  Stream s(13);
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  std::vector<int> original = v;
  s.shuffle(v);
  EXPECT_NE(v, original);  // astronomically unlikely to be identity
  std::sort(v.begin(), v.end());
  EXPECT_EQ(v, original);
}

TEST(Stream, UniformRespectsBounds) {
  Stream s(17);
  for (int i = 0; i < 10000; ++i) {
    double x = s.uniform(-0.25, 0.75);
    ASSERT_GE(x, -0.25);
    ASSERT_LT(x, 0.75);
  }
}

}  // namespace
}  // namespace ldpfed
