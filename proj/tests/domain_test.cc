//
// Copyright 2026 The Fairproxy Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "fairproxy/domain.h"

#include <random>
#include <vector>

#include <gtest/gtest.h>

namespace fairproxy {
namespace {

void ExpectProbs(const RaceDistribution& d, std::vector<double> expected) {
  ASSERT_EQ(d.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_DOUBLE_EQ(d[i], expected[i]) << "index " << i;
  }
}

TEST(NormalizeTest, ForcedArithmetic) {
  ExpectProbs(Normalize(std::vector<double>{2, 1, 1}), {0.5, 0.25, 0.25});
}

TEST(NormalizeTest, SingleSupport) {
  ExpectProbs(Normalize(std::vector<double>{0, 0, 5}), {0, 0, 1});
}

TEST(NormalizeTest, Symmetric) {
  ExpectProbs(Normalize(std::vector<double>{1, 1, 1, 1}),
              {0.25, 0.25, 0.25, 0.25});
}

TEST(NormalizeTest, AllZeroThrows) {
  try {
    Normalize(std::vector<double>{0, 0, 0});
    FAIL() << "expected AllZero";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAllZero);
  }
}

TEST(NormalizeTest, RejectsNegativeAndNonFinite) {
  EXPECT_THROW(Normalize(std::vector<double>{1, -1}), Error);
  EXPECT_THROW(Normalize(std::vector<double>{1, std::nan("")}), Error);
}

TEST(NormalizeTest, IdempotentUnderRescaling) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> w(2 + trial % 5);
    for (auto& x : w) x = unit(rng);
    const RaceDistribution once = Normalize(w);
    const double c = 0.01 + 100.0 * unit(rng);
    std::vector<double> scaled = once.vector();
    for (auto& x : scaled) x *= c;
    const RaceDistribution twice = Normalize(scaled);
    for (std::size_t i = 0; i < w.size(); ++i) {
      EXPECT_NEAR(once[i], twice[i], 1e-15);
    }
    EXPECT_TRUE(IsValidDistribution(twice.probs()));
  }
}

TEST(L1DistanceTest, Identity) {
  const RaceDistribution a(std::vector<double>{0.2, 0.3, 0.5});
  EXPECT_EQ(L1Distance(a, a), 0.0);
}

TEST(L1DistanceTest, DisjointSupport) {
  EXPECT_DOUBLE_EQ(L1Distance(std::vector<double>{1, 0},
                              std::vector<double>{0, 1}),
                   2.0);
}

TEST(L1DistanceTest, ForcedArithmetic) {
  EXPECT_DOUBLE_EQ(L1Distance(std::vector<double>{0.5, 0.5},
                              std::vector<double>{0.25, 0.75}),
                   0.5);
}

TEST(L1DistanceTest, LengthMismatch) {
  try {
    L1Distance(std::vector<double>{1, 0}, std::vector<double>{1, 0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLengthMismatch);
  }
}

TEST(RaceSetTest, RejectsDuplicatesEmptyAndSingletons) {
  EXPECT_THROW(RaceSet({"a", "a"}), Error);
  EXPECT_THROW(RaceSet({"a", ""}), Error);
  EXPECT_THROW(RaceSet(std::vector<std::string>{"a"}), Error);
}

TEST(RaceSetTest, IndexOfFollowsOrder) {
  const RaceSet races{"white", "black", "hispanic"};
  EXPECT_EQ(races.IndexOf("black"), 1u);
  EXPECT_FALSE(races.IndexOf("asian").has_value());
  EXPECT_EQ(races.label(2), "hispanic");
}

TEST(RaceDistributionTest, EnforcesInvariant) {
  EXPECT_THROW(RaceDistribution(std::vector<double>{0.5, 0.6}), Error);
  EXPECT_THROW(RaceDistribution(std::vector<double>{1.5, -0.5}), Error);
  EXPECT_NO_THROW(RaceDistribution(std::vector<double>{0.5, 0.5 + 1e-10}));
  ExpectProbs(RaceDistribution::Uniform(4), {0.25, 0.25, 0.25, 0.25});
}

TEST(DomainTest, ContextMustBeBinary) {
  EXPECT_NO_THROW(CheckContext(0));
  EXPECT_NO_THROW(CheckContext(1));
  try {
    CheckContext(2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidContext);
  }
}

TEST(DomainTest, NamesAreTrimmedAndUppercased) {
  EXPECT_EQ(NormalizeName("  garcia "), "GARCIA");
  EXPECT_EQ(NormalizeName(""), "");
}

}  // namespace
}  // namespace fairproxy
