// Copyright 2026 The AFCC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "pruning/pruning.hpp"
#include "support/oracles.hpp"

namespace afcc::pruning {
namespace {

using metrics::FilterProfile;

FilterProfile profile(std::vector<int> labels) {
  FilterProfile p;
  std::sort(labels.begin(), labels.end());
  if (!labels.empty()) p.clusters.push_back({labels});
  p.label_union = labels;
  return p;
}

std::vector<FilterProfile> profiles(const std::vector<std::vector<int>>& sets) {
  std::vector<FilterProfile> out;
  for (const auto& s : sets) out.push_back(profile(s));
  return out;
}

std::vector<std::vector<int>> random_sets(Rng& rng, int n, int L, int max_size) {
  std::vector<std::vector<int>> out;
  for (int i = 0; i < n; ++i)
    out.push_back(testing::random_label_set(rng, rng.range(0, max_size), L));
  return out;
}

std::vector<std::vector<int>> to_rows(const ConnectionMask& m) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(m.rows), std::vector<int>(static_cast<std::size_t>(m.cols)));
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = m.at(r, c);
  return out;
}

std::size_t popcount(const ConnectionMask& m) {
  std::size_t n = 0;
  for (auto b : pack_bits(m.keep)) n += static_cast<std::size_t>(std::popcount(b));
  return n;
}

TEST(AfccMask, WorkedExample) {
  const auto prev = profiles({{1, 2}, {3}, {4}});
  const auto next = profiles({{2}, {5}, {3, 4}});
  const auto m = afcc_mask(prev, next);
  EXPECT_EQ(m.granularity, Granularity::kFilterPair);
  EXPECT_EQ(to_rows(m), (std::vector<std::vector<int>>{{1, 0, 0}, {0, 0, 0}, {0, 1, 1}}));
}

TEST(AfccMask, SharedGlobalLabelKeepsEverything) {
  const auto prev = profiles({{0, 3}, {0}, {0, 7}});
  const auto next = profiles({{0, 1}, {0, 9}});
  const auto m = afcc_mask(prev, next);
  EXPECT_EQ(m.kept(), m.total());
  EXPECT_DOUBLE_EQ(measured_dilution(m), 0.0);
}

TEST(AfccMask, EmptyProfileListRejected) {
  const auto some = profiles({{1}});
  EXPECT_THROW(afcc_mask({}, some), Error);
  EXPECT_THROW(afcc_mask(some, {}), Error);
}

TEST(AfccMask, DeadFiltersGetZeroRowsAndColumns) {
  const auto prev = profiles({{1}, {}, {2}});
  const auto next = profiles({{}, {1, 2}});
  const auto m = afcc_mask(prev, next);
  for (int c = 0; c < m.cols; ++c) EXPECT_EQ(m.at(0, c), 0);
  for (int r = 0; r < m.rows; ++r) EXPECT_EQ(m.at(r, 1), 0);
  const auto rep = check_connectivity(m);
  EXPECT_EQ(rep.rows_without_inbound, std::vector<int>{0});
  EXPECT_EQ(rep.cols_without_outbound, std::vector<int>{1});
}

TEST(AfccMask, MatchesIntersectionOracleOnRandomUnions) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int L = rng.range(2, 30);
    const auto a = random_sets(rng, rng.range(1, 24), L, std::min(L, 6));
    const auto b = random_sets(rng, rng.range(1, 24), L, std::min(L, 6));
    EXPECT_EQ(to_rows(afcc_mask(profiles(a), profiles(b))), testing::intersection_oracle(a, b))
        << "trial " << trial;
  }
}

TEST(AfccMask, RelabelingLeavesMaskUnchanged) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const int L = rng.range(3, 20);
    auto a = random_sets(rng, 12, L, 4);
    auto b = random_sets(rng, 9, L, 4);
    std::vector<int> perm(static_cast<std::size_t>(L));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    auto relabel = [&](std::vector<std::vector<int>> sets) {
      for (auto& s : sets) {
        for (auto& y : s) y = perm[static_cast<std::size_t>(y)];
        std::sort(s.begin(), s.end());
      }
      return sets;
    };
    EXPECT_EQ(afcc_mask(profiles(a), profiles(b)), afcc_mask(profiles(relabel(a)), profiles(relabel(b))));
  }
}

TEST(AfccMask, AddingALabelNeverDropsAConnection) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const int L = rng.range(3, 20);
    auto a = random_sets(rng, 10, L, 4);
    const auto b = random_sets(rng, 10, L, 4);
    const auto before = afcc_mask(profiles(a), profiles(b));
    auto& grow = a[static_cast<std::size_t>(rng.range(0, 9))];
    const int y = rng.range(0, L - 1);
    if (!std::binary_search(grow.begin(), grow.end(), y)) {
      grow.push_back(y);
      std::sort(grow.begin(), grow.end());
    }
    const auto after = afcc_mask(profiles(a), profiles(b));
    for (std::size_t k = 0; k < before.keep.size(); ++k)
      if (before.keep[k]) {
        EXPECT_EQ(after.keep[k], 1);
      }
  }
}

TEST(AfccOutputMask, KeepsExactlyTheUnionLabels) {
  const auto last = profiles({{7}, {}, {1, 4}});
  const auto m = afcc_output_mask(last, 10);
  EXPECT_EQ(m.rows, 10);
  EXPECT_EQ(m.cols, 3);
  int col0 = 0, col1 = 0;
  for (int y = 0; y < 10; ++y) {
    col0 += m.at(y, 0);
    col1 += m.at(y, 1);
  }
  EXPECT_EQ(col0, 1);
  EXPECT_EQ(m.at(7, 0), 1);
  EXPECT_EQ(col1, 0);
  EXPECT_EQ(m.at(1, 2) + m.at(4, 2), 2);
}

TEST(AfccOutputMask, DilutionTracksMeanDiagonal) {
  // Unions of mean size 4.61 over 100 labels.
  Rng rng(14);
  std::vector<std::vector<int>> sets;
  double total = 0.0;
  for (int f = 0; f < 512; ++f) {
    const int k = rng.bernoulli(0.61) ? 5 : 4;
    total += k;
    sets.push_back(testing::random_label_set(rng, k, 100));
  }
  const double mean = total / 512.0;
  const auto m = afcc_output_mask(profiles(sets), 100);
  EXPECT_NEAR(measured_dilution(m), 1.0 - mean / 100.0, 1e-12);
  EXPECT_NEAR(estimate_dilution(4.61, 1.0, 100), 0.954, 5e-4);
  EXPECT_NEAR(estimate_dilution(4.61, 1.0, 100), 0.95, 0.05);
}

TEST(AAfccAssign, SizesGrowTowardsLowerLayers) {
  const std::vector<int> counts(6, 64);
  const auto a = a_afcc_assign(counts, 7, 1, 100, 3);
  std::vector<int> sizes;
  for (auto it = a.rbegin(); it != a.rend(); ++it) sizes.push_back(it->cluster_size);
  EXPECT_EQ(sizes, (std::vector<int>{7, 8, 9, 10, 11, 12}));
  for (const auto& layer : a)
    for (const auto& s : layer.labels) EXPECT_EQ(static_cast<int>(s.size()), layer.cluster_size);
}

TEST(AAfccAssign, ExactCoverageWhenBlocksTile) {
  const std::vector<int> counts{50};
  const auto a = a_afcc_assign(counts, 2, 1, 100, 9);
  EXPECT_EQ(a[0].coverage, std::vector<int>(100, 1));
}

TEST(AAfccAssign, CoverageEvenForAnyShape) {
  Rng rng(15);
  for (int trial = 0; trial < 300; ++trial) {
    const int L = rng.range(1, 40);
    const int depth = rng.range(1, 4);
    const int inc = rng.range(0, 2);
    const int base = rng.range(1, std::max(1, L - (depth - 1) * inc));
    if (base + (depth - 1) * inc > L) continue;
    std::vector<int> counts;
    for (int k = 0; k < depth; ++k) counts.push_back(rng.range(1, 70));
    const auto a = a_afcc_assign(counts, base, inc, L, rng.next());
    for (std::size_t k = 0; k < a.size(); ++k) {
      std::vector<int> oracle(static_cast<std::size_t>(L), 0);
      for (const auto& s : a[k].labels) {
        EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
        EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
        for (int y : s) ++oracle[static_cast<std::size_t>(y)];
      }
      EXPECT_EQ(oracle, a[k].coverage);
      EXPECT_LE(a[k].coverage_spread(), 1) << "trial " << trial;
    }
  }
}

TEST(AAfccAssign, InfeasibleSizesRejected) {
  const std::vector<int> counts{4, 4, 4};
  EXPECT_THROW(a_afcc_assign(counts, 9, 1, 10, 1), Error);
  EXPECT_THROW(a_afcc_assign(counts, 0, 1, 10, 1), Error);
  EXPECT_NO_THROW(a_afcc_assign(counts, 8, 1, 10, 1));
}

TEST(AAfccMasks, MatchIntersectionOracle) {
  const std::vector<int> counts{12, 10, 8};
  const auto a = a_afcc_assign(counts, 3, 1, 10, 4);
  const auto masks = a_afcc_masks(a);
  ASSERT_EQ(masks.size(), 2u);
  for (std::size_t k = 0; k < masks.size(); ++k)
    EXPECT_EQ(to_rows(masks[k]), testing::intersection_oracle(a[k].labels, a[k + 1].labels));
}

TEST(AAfccMasks, DisjointAssignmentsAreFatal) {
  std::vector<LabelAssignment> a(2);
  a[0].labels = {{0, 1}, {1, 2}};
  a[1].labels = {{5}, {6, 7}};
  try {
    a_afcc_masks(a);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPrerequisite);
  }
}

TEST(RandomMask, ExtremeRates) {
  EXPECT_EQ(r_afcc_filter_mask(7, 5, 0.0, 1).kept(), 35u);
  EXPECT_EQ(r_afcc_filter_mask(7, 5, 1.0, 1).kept(), 0u);
  const auto w = r_afcc_weight_mask(4, 9, 0.0, 1);
  EXPECT_EQ(w.granularity, Granularity::kWeight);
  EXPECT_EQ(w.kept(), w.total());
  EXPECT_THROW(r_afcc_filter_mask(2, 2, 1.5, 1), Error);
}

TEST(RandomMask, DeterministicPerSeed) {
  EXPECT_EQ(r_afcc_filter_mask(30, 30, 0.4, 8), r_afcc_filter_mask(30, 30, 0.4, 8));
  EXPECT_NE(r_afcc_filter_mask(30, 30, 0.4, 8), r_afcc_filter_mask(30, 30, 0.4, 9));
}

TEST(RandomMask, FilterPairConcentration) {
  EXPECT_NEAR(measured_dilution(r_afcc_filter_mask(512, 512, 0.9, 21)), 0.9, 0.01);
}

TEST(RandomMask, WeightConcentration) {
  EXPECT_NEAR(measured_dilution(r_afcc_weight_mask(1000, 1000, 0.9, 22)), 0.9, 0.005);
}

TEST(RandomMask, UnbiasedWithinFourSigma) {
  Rng rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    const double rate = rng.uniform(0.05, 0.95);
    const int rows = rng.range(20, 200);
    const int cols = rng.range(20, 200);
    const double n = static_cast<double>(rows) * cols;
    const double bound = 4.0 * std::sqrt(rate * (1.0 - rate) / n);
    EXPECT_LE(std::abs(measured_dilution(r_afcc_filter_mask(rows, cols, rate, rng.next())) - rate), bound);
    EXPECT_LE(std::abs(measured_dilution(r_afcc_weight_mask(rows, cols, rate, rng.next())) - rate), bound);
  }
}

TEST(ConnectionMaskExpand, ReplicatesEachPairOverTheKernel) {
  const auto m = r_afcc_filter_mask(6, 5, 0.5, 31);
  const auto w = m.expand(9);
  EXPECT_EQ(w.granularity, Granularity::kWeight);
  EXPECT_EQ(w.cols, 45);
  EXPECT_EQ(w.kept(), 9 * m.kept());
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c)
      for (int k = 0; k < 9; ++k) EXPECT_EQ(w.at(r, c * 9 + k), m.at(r, c));
  EXPECT_DOUBLE_EQ(w.dilution_rate(), m.dilution_rate());
}

TEST(FcNodeMask, MatchesBruteForceOn64Nodes) {
  Rng rng(41);
  auto a = random_sets(rng, 64, 12, 3);
  auto b = random_sets(rng, 64, 12, 3);
  const auto r = fc_node_mask(profiles(a), profiles(b), true);
  const auto oracle = testing::intersection_oracle(a, b);
  std::size_t expect = 0;
  for (const auto& row : oracle) expect += static_cast<std::size_t>(std::accumulate(row.begin(), row.end(), 0));
  EXPECT_EQ(r.mask.kept(), expect);
  EXPECT_EQ(to_rows(r.mask), oracle);
}

TEST(FcNodeMask, NoiseNodeRemovalFlag) {
  const auto prev = profiles({{1}, {}, {2}});
  const auto next = profiles({{1, 2}, {}});
  const auto on = fc_node_mask(prev, next, true);
  EXPECT_EQ(on.removed_prev, std::vector<int>{1});
  EXPECT_EQ(on.removed_next, std::vector<int>{1});
  for (int c = 0; c < 3; ++c) EXPECT_EQ(on.mask.at(1, c), 0);
  for (int r = 0; r < 2; ++r) EXPECT_EQ(on.mask.at(r, 1), 0);

  const auto off = fc_node_mask(prev, next, false);
  EXPECT_TRUE(off.removed_prev.empty());
  EXPECT_TRUE(off.removed_next.empty());
  for (int c = 0; c < 3; ++c) EXPECT_EQ(off.mask.at(1, c), 1);
  for (int r = 0; r < 2; ++r) EXPECT_EQ(off.mask.at(r, 1), 1);
  EXPECT_EQ(off.mask.at(0, 0), 1);
  EXPECT_EQ(off.mask.at(0, 2), 1);
}

TEST(FcNodeMask, UniformSingleLabelCountingLaw) {
  Rng rng(42);
  const int N = 4096, L = 100;
  std::vector<std::vector<int>> a, b;
  for (int i = 0; i < N; ++i) a.push_back({rng.range(0, L - 1)});
  for (int i = 0; i < N; ++i) b.push_back({rng.range(0, L - 1)});
  const auto r = fc_node_mask(profiles(a), profiles(b), true);
  const double expect = static_cast<double>(N) * N / L;
  EXPECT_NEAR(static_cast<double>(r.mask.kept()), expect, 0.05 * expect);
  EXPECT_NEAR(measured_dilution(r.mask), 0.99, 0.01);
}

TEST(EstimateDilution, ClosedFormExamples) {
  EXPECT_DOUBLE_EQ(estimate_dilution(10, 3, 10), 0.0);
  EXPECT_DOUBLE_EQ(estimate_dilution(0, 3, 10), 1.0);
  EXPECT_NEAR(estimate_dilution(2.45, 4.61, 100), 0.892, 5e-4);
  EXPECT_NEAR(estimate_dilution(4.83, 2.45, 100), 0.886, 5e-4);
  EXPECT_THROW(estimate_dilution(-1, 1, 10), Error);
  EXPECT_THROW(estimate_dilution(1, 11, 10), Error);
}

TEST(EstimateDilution, PublishedColumnWithinTolerance) {
  // (dPrev, dNext, published rate) for the top three rows.
  const double rows[][3] = {{4.83, 2.45, 0.90}, {2.45, 4.61, 0.90}, {4.61, 1.0, 0.95}};
  for (const auto& r : rows) EXPECT_NEAR(estimate_dilution(r[0], r[1], 100), r[2], 0.05);
}

TEST(EstimateDilution, MatchesMonteCarlo) {
  Rng rng(51);
  const int cases[][3] = {{2, 5, 100}, {5, 2, 100}, {3, 3, 10}, {1, 1, 4}, {7, 4, 30}};
  for (const auto& c : cases) {
    const double mc = testing::monte_carlo_disjoint(rng, c[0], c[1], c[2], 100000);
    EXPECT_NEAR(estimate_dilution(c[0], c[1], c[2]), mc, 0.01);
  }
}

TEST(MeasuredDilution, EqualsPopcountOracle) {
  Rng rng(61);
  EXPECT_DOUBLE_EQ(measured_dilution(ConnectionMask(3, 4, Granularity::kFilterPair, true)), 0.0);
  EXPECT_DOUBLE_EQ(measured_dilution(ConnectionMask(3, 4, Granularity::kFilterPair, false)), 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = r_afcc_filter_mask(rng.range(1, 50), rng.range(1, 50), rng.uniform(), rng.next());
    const double oracle = 1.0 - static_cast<double>(popcount(m)) / static_cast<double>(m.total());
    EXPECT_DOUBLE_EQ(measured_dilution(m), oracle);
  }
}

TEST(Scheme, NamesRoundTrip) {
  for (auto s : {Scheme::kAfcc, Scheme::kArtificialAfcc, Scheme::kRandomFilter, Scheme::kRandomWeight,
                 Scheme::kFcNode})
    EXPECT_EQ(scheme_from_string(to_string(s)), s);
  EXPECT_THROW(scheme_from_string("magnitude"), Error);
}

}  // namespace
}  // namespace afcc::pruning
