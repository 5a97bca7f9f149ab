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
#include <numeric>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "metrics/filter_metrics.hpp"
#include "support/oracles.hpp"

namespace afcc::metrics {
namespace {

ClippedMatrix from_cells(int L, const std::vector<std::pair<int, int>>& ones) {
  ClippedMatrix c;
  c.labels = L;
  c.threshold = 0.5;
  c.bits.assign(static_cast<std::size_t>(L) * L, 0);
  for (auto [i, j] : ones) c.bits[static_cast<std::size_t>(i) * L + j] = 1;
  return c;
}

ClippedMatrix random_clipped(Rng& rng, int L, double density) {
  ClippedMatrix c;
  c.labels = L;
  c.threshold = 0.5;
  c.bits.resize(static_cast<std::size_t>(L) * L);
  for (auto& b : c.bits) b = rng.bernoulli(density) ? 1 : 0;
  return c;
}

std::vector<int> sizes(const FilterProfile& p) {
  std::vector<int> s;
  for (const auto& c : p.clusters) s.push_back(c.size());
  std::sort(s.rbegin(), s.rend());
  return s;
}

std::vector<std::vector<int>> sorted_clusters(const FilterProfile& p) {
  std::vector<std::vector<int>> out;
  for (const auto& c : p.clusters) {
    auto v = c.labels;
    std::sort(v.begin(), v.end());
    out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

TEST(FindClusters, WorkedExample) {
  const auto c = from_cells(5, {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {3, 3}, {0, 4}});
  const auto p = find_clusters(c);
  EXPECT_EQ(sorted_clusters(p), (std::vector<std::vector<int>>{{0, 1}, {3}}));
  EXPECT_EQ(p.noise_count, 1);
  EXPECT_EQ(p.label_union, (std::vector<int>{0, 1, 3}));
  EXPECT_EQ(testing::validate_clusters(c, p), "");
}

TEST(FindClusters, IdentityGivesSingletons) {
  std::vector<std::pair<int, int>> d;
  for (int i = 0; i < 9; ++i) d.emplace_back(i, i);
  const auto p = find_clusters(from_cells(9, d));
  EXPECT_EQ(p.clusters.size(), 9u);
  EXPECT_EQ(p.noise_count, 0);
}

TEST(FindClusters, FullMatrixIsOneCluster) {
  std::vector<std::pair<int, int>> all;
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 100; ++j) all.emplace_back(i, j);
  const auto p = find_clusters(from_cells(100, all));
  ASSERT_EQ(p.clusters.size(), 1u);
  EXPECT_EQ(p.clusters[0].size(), 100);
  EXPECT_EQ(p.noise_count, 0);
}

TEST(FindClusters, EarliestOpenedClusterWins) {
  // Label 2 pairs with both {0} and {1}; it joins the first one opened.
  const auto c = from_cells(3, {{0, 0}, {1, 1}, {2, 2}, {0, 2}, {2, 0}, {1, 2}, {2, 1}});
  const auto p = find_clusters(c);
  EXPECT_EQ(sorted_clusters(p), (std::vector<std::vector<int>>{{0, 2}, {1}}));
}

TEST(FindClusters, OrderDependenceFoundBySearch) {
  // Search 4x4 symmetric matrices with a full diagonal for one whose
  // ascending scan yields sizes 3+1 while some other visiting order yields 2+2.
  Rng rng(17);
  bool found = false;
  for (int trial = 0; trial < 5000 && !found; ++trial) {
    auto c = random_clipped(rng, 4, 0.5);
    for (int i = 0; i < 4; ++i) {
      c.bits[static_cast<std::size_t>(i * 4 + i)] = 1;
      for (int j = 0; j < i; ++j) c.bits[static_cast<std::size_t>(j * 4 + i)] = c.bits[static_cast<std::size_t>(i * 4 + j)];
    }
    if (sizes(find_clusters(c)) != std::vector<int>{3, 1}) continue;
    std::vector<int> order = {0, 1, 2, 3};
    while (std::next_permutation(order.begin(), order.end())) {
      const auto p = find_clusters(c, order);
      ASSERT_EQ(testing::validate_clusters(c, p), "");
      if (sizes(p) == std::vector<int>{2, 2}) {
        found = true;
        break;
      }
    }
  }
  EXPECT_TRUE(found);
}

TEST(FindClusters, RandomMatricesPassValidator) {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int L = rng.range(1, 20);
    const auto c = random_clipped(rng, L, rng.uniform(0.0, 0.9));
    const auto p = find_clusters(c);
    ASSERT_EQ(testing::validate_clusters(c, p), "") << "trial " << trial;
  }
}

TEST(Normalize, Examples) {
  FieldMatrix m;
  m.labels = 2;
  m.values = {2, 0, 0, 4};
  const auto n = normalize(m);
  EXPECT_EQ(n.values, (std::vector<double>{0.5, 0, 0, 1}));
  EXPECT_TRUE(n.normalized);
  EXPECT_EQ(normalize(n).values, n.values);
  m.values = {-8, 1, 4, 0};
  EXPECT_DOUBLE_EQ(normalize(m).at(0, 0), -2.0);
  m.values = {-1, 0, 0, -3};
  EXPECT_TRUE(normalize(m).dead);
}

TEST(Clip, ExamplesAndNegativeCells) {
  FieldMatrix m;
  m.labels = 2;
  m.values = {1.0, 0.2, 0.31, -0.4};
  m.normalized = true;
  const auto c = clip(m, 0.3);
  EXPECT_EQ(c.bits, (std::vector<std::uint8_t>{1, 0, 1, 0}));
  ASSERT_EQ(c.negative_extreme.size(), 1u);
  EXPECT_EQ(c.negative_extreme[0], std::make_pair(1, 1));
  m.values = {1.0, 0.3, 0.97, 0.98};
  EXPECT_EQ(clip(m, 0.98).bits, (std::vector<std::uint8_t>{1, 0, 0, 1}));  // inclusive at th
  EXPECT_EQ(clip(m, 0.3).bits, (std::vector<std::uint8_t>{1, 1, 1, 1}));
  m.values = {0.1, 0.2, 0.0, 0.25};
  const auto z = clip(m, 0.3);
  EXPECT_EQ(z.ones(), 0u);
  EXPECT_TRUE(find_clusters(z).dead());
  EXPECT_THROW(clip(m, 1.0), Error);
  EXPECT_THROW(clip(m, 0.0), Error);
}

TEST(PermuteForDisplay, BlocksAndInverse) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const int L = rng.range(2, 16);
    const auto c = random_clipped(rng, L, rng.uniform(0.1, 0.6));
    const auto p = find_clusters(c);
    const auto [perm, shown] = permute_for_display(c, p);
    // Clusters become contiguous all-ones diagonal blocks.
    const auto inv = invert_permutation(perm);
    for (const auto& cl : p.clusters) {
      std::vector<int> pos;
      for (int l : cl.labels) pos.push_back(inv[static_cast<std::size_t>(l)]);
      std::sort(pos.begin(), pos.end());
      EXPECT_EQ(pos.back() - pos.front() + 1, static_cast<int>(pos.size()));
      for (int a : pos)
        for (int b : pos) EXPECT_TRUE(shown.at(a, b));
    }
    EXPECT_EQ(permute(shown, inv).bits, c.bits);
  }
}

TEST(PermuteForDisplay, ContiguousClustersKeepIdentity) {
  const auto c = from_cells(4, {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 2}, {3, 3}});
  const auto [perm, shown] = permute_for_display(c, find_clusters(c));
  EXPECT_EQ(perm, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(shown.bits, c.bits);
}

FilterProfile profile_of(std::vector<std::vector<int>> clusters, int noise = 0) {
  FilterProfile p;
  for (auto& c : clusters) p.clusters.push_back({c});
  p.noise_count = noise;
  std::vector<int> u;
  for (auto& c : clusters) u.insert(u.end(), c.begin(), c.end());
  std::sort(u.begin(), u.end());
  p.label_union = u;
  return p;
}

TEST(LayerStats, SingleClusterOfThree) {
  std::vector<FilterProfile> ps(5, profile_of({{1, 2, 3}}));
  const auto s = layer_stats(ps);
  EXPECT_DOUBLE_EQ(s.n_c, 1.0);
  EXPECT_DOUBLE_EQ(s.c_s, 3.0);
  EXPECT_DOUBLE_EQ(s.diagonal, 3.0);
  EXPECT_EQ(s.filters, 5);
}

TEST(LayerStats, MixedProfilesMatchHandSums) {
  std::vector<FilterProfile> ps = {profile_of({{0, 1}, {4}}, 3), profile_of({{2, 3, 5, 6}}, 1),
                                   profile_of({}, 0), profile_of({{7}, {8}, {9}}, 2)};
  const auto s = layer_stats(ps);
  // 6 clusters over 4 filters; 10 members over 6 clusters; noise 6 / 4.
  EXPECT_DOUBLE_EQ(s.n_c, 1.5);
  EXPECT_DOUBLE_EQ(s.c_s, 10.0 / 6.0);
  EXPECT_DOUBLE_EQ(s.diagonal, s.n_c * s.c_s);
  EXPECT_DOUBLE_EQ(s.diagonal, 2.5);
  EXPECT_DOUBLE_EQ(s.noise, 1.5);
}

TEST(LayerStats, ReferenceRowFormatting) {
  // 1.53 clusters of mean size 3.01 per filter give a diagonal of 4.61.
  EXPECT_NEAR(1.53 * 3.01, 4.61, 0.005);
}

// A probe over 3 labels with one feature per filter; hand-set readout.
probe::ProbeSpec toy_probe() {
  probe::ProbeSpec p;
  p.feature_shape = {2, 1, 1};
  p.num_labels = 3;
  // readout[j][k]
  p.readout = {1.0f, 0.0f,    //
               0.5f, -1.0f,   //
               0.0f, 2.0f};
  return p;
}

probe::FeatureSet toy_features() {
  probe::FeatureSet f;
  f.dim = 2;
  f.features = {1, 0, 2, 1, 0, 3, 1, 1};
  f.labels = {0, 0, 1, 2};
  return f;
}

TEST(FieldMatrices, HandComputedThreeLabelToy) {
  const auto p = toy_probe();
  const auto f = toy_features();
  // Filter 0 feeds feature 0 only: field_j = readout[j][0] * x0.
  // label 0: x0 = 1 + 2 = 3 -> (3, 1.5, 0); label 1: x0 = 0; label 2: x0 = 1.
  const auto m0 = single_filter_fields(p, 0, f);
  EXPECT_EQ(m0.values, (std::vector<double>{3, 1.5, 0, 0, 0, 0, 1, 0.5, 0}));
  // Filter 1: field_j = readout[j][1] * x1; label 0: x1 = 1, label 1: 3, label 2: 1.
  const auto m1 = single_filter_fields(p, 1, f);
  EXPECT_EQ(m1.values, (std::vector<double>{0, -1, 2, 0, -3, 6, 0, -1, 2}));
  const auto all = all_filter_fields(p, f);
  EXPECT_EQ(all[0].values, m0.values);
  EXPECT_EQ(all[1].values, m1.values);
}

TEST(FieldMatrices, SuperpositionAndSilentFilter) {
  Rng rng(4);
  probe::ProbeSpec p;
  p.feature_shape = {5, 2, 2};
  p.num_labels = 4;
  p.readout.resize(80);
  for (auto& w : p.readout) w = static_cast<float>(rng.uniform(-1, 1));
  probe::FeatureSet f;
  f.dim = 20;
  for (int s = 0; s < 40; ++s) {
    f.labels.push_back(s % 4);
    for (int k = 0; k < 20; ++k) f.features.push_back(k / 4 == 2 ? 0.0f : static_cast<float>(rng.uniform(0, 1)));
  }
  const auto full = full_probe_fields(p, f);
  const auto parts = all_filter_fields(p, f);
  for (std::size_t c = 0; c < full.values.size(); ++c) {
    double sum = 0.0;
    for (const auto& m : parts) sum += m.values[c];
    EXPECT_NEAR(sum, full.values[c], 1e-9);
  }
  for (double v : parts[2].values) EXPECT_EQ(v, 0.0);
}

TEST(FieldMatrices, EmptyLabelClassIsNamed) {
  auto f = toy_features();
  f.labels = {0, 0, 2, 2};
  try {
    single_filter_fields(toy_probe(), 0, f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("label 1"), std::string::npos);
  }
}

TEST(FieldMatrices, ImbalanceFlag) {
  std::vector<int> balanced, skewed;
  for (int i = 0; i < 100; ++i) balanced.push_back(i % 4);
  skewed = balanced;
  for (int i = 0; i < 3; ++i) skewed.push_back(0);
  EXPECT_FALSE(labels_imbalanced(balanced, 4));
  EXPECT_TRUE(labels_imbalanced(skewed, 4));
}

TEST(Export, CsvAndPpm) {
  FieldMatrix m;
  m.labels = 2;
  m.values = {1.0, -0.5, 0.4, 0.1};
  m.normalized = true;
  EXPECT_EQ(to_csv(m).substr(0, 1), "1");
  const auto c = clip(m, 0.3);
  EXPECT_EQ(to_csv(c), "1,0\n1,0\n");
  const auto p = find_clusters(c);
  const auto ppm = render_ppm(c, p, 1);
  const std::string header = "P6\n2 2\n255\n";
  ASSERT_EQ(ppm.size(), header.size() + 12);
  EXPECT_EQ(std::string(ppm.begin(), ppm.begin() + static_cast<long>(header.size())), header);
  auto px = [&](int y, int x) {
    const std::size_t o = header.size() + static_cast<std::size_t>((y * 2 + x) * 3);
    return std::vector<int>{ppm[o], ppm[o + 1], ppm[o + 2]};
  };
  EXPECT_EQ(px(0, 0), (std::vector<int>{255, 255, 255}));  // cluster {0}
  EXPECT_EQ(px(1, 0), (std::vector<int>{255, 255, 0}));    // noise
  EXPECT_EQ(px(0, 1), (std::vector<int>{0, 200, 0}));      // <= -th
  EXPECT_EQ(px(1, 1), (std::vector<int>{0, 0, 0}));
}

// ---- properties

TEST(Properties, NoiseReconcilesAndPartition) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int L = rng.range(8, 16);
    const auto c = random_clipped(rng, L, rng.uniform(0.05, 0.5));
    const auto p = find_clusters(c);
    std::size_t blocks = 0;
    for (const auto& cl : p.clusters) blocks += static_cast<std::size_t>(cl.size() * cl.size());
    EXPECT_EQ(c.ones(), blocks + static_cast<std::size_t>(p.noise_count));
  }
}

TEST(Properties, LabelPermutationEquivariance) {
  // Relabeling inputs and outputs by pi permutes the field matrix; scanning
  // the relabeled matrix in the relabeled order gives the same clusters.
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const int L = rng.range(3, 8);
    probe::ProbeSpec p;
    p.feature_shape = {3, 2, 1};
    p.num_labels = L;
    p.readout.resize(static_cast<std::size_t>(L) * 6);
    for (auto& w : p.readout) w = static_cast<float>(rng.uniform(-1, 1));
    probe::FeatureSet f;
    f.dim = 6;
    for (int s = 0; s < 4 * L; ++s) {
      f.labels.push_back(s % L);
      for (int k = 0; k < 6; ++k) f.features.push_back(static_cast<float>(rng.uniform(0, 1)));
    }
    std::vector<int> pi(static_cast<std::size_t>(L));
    std::iota(pi.begin(), pi.end(), 0);
    rng.shuffle(pi.begin(), pi.end());
    probe::ProbeSpec pp = p;
    for (int j = 0; j < L; ++j)
      for (int k = 0; k < 6; ++k)
        pp.readout[static_cast<std::size_t>(pi[static_cast<std::size_t>(j)] * 6 + k)] = p.readout[static_cast<std::size_t>(j * 6 + k)];
    probe::FeatureSet ff = f;
    for (auto& l : ff.labels) l = pi[static_cast<std::size_t>(l)];

    const auto a = all_filter_fields(p, f);
    const auto b = all_filter_fields(pp, ff);
    for (std::size_t u = 0; u < a.size(); ++u) {
      for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j)
          ASSERT_NEAR(b[u].at(pi[static_cast<std::size_t>(i)], pi[static_cast<std::size_t>(j)]), a[u].at(i, j), 1e-9);
      const auto ca = clip(normalize(a[u]), 0.3);
      const auto cb = clip(normalize(b[u]), 0.3);
      const auto pa = find_clusters(ca);
      const auto pb = find_clusters(cb, pi);
      EXPECT_EQ(sizes(pa), sizes(pb));
      EXPECT_EQ(pa.noise_count, pb.noise_count);
    }
    std::vector<FilterProfile> sa, sb;
    for (std::size_t u = 0; u < a.size(); ++u) {
      sa.push_back(find_clusters(clip(normalize(a[u]), 0.3)));
      sb.push_back(find_clusters(clip(normalize(b[u]), 0.3), pi));
    }
    const auto la = layer_stats(sa), lb = layer_stats(sb);
    EXPECT_DOUBLE_EQ(la.n_c, lb.n_c);
    EXPECT_DOUBLE_EQ(la.c_s, lb.c_s);
    EXPECT_DOUBLE_EQ(la.noise, lb.noise);
  }
}

TEST(Properties, ThresholdMonotonicity) {
  Rng rng(51);
  for (int trial = 0; trial < 300; ++trial) {
    const int L = rng.range(4, 14);
    FieldMatrix m;
    m.labels = L;
    m.values.resize(static_cast<std::size_t>(L) * L);
    for (auto& v : m.values) v = rng.uniform(-1, 1);
    m.values[0] = 1.0;
    m.normalized = true;
    std::size_t prev_ones = SIZE_MAX;
    int prev_clustered = L + 1;
    for (double th = 0.05; th < 1.0; th += 0.05) {
      const auto c = clip(m, th);
      const auto p = find_clusters(c);
      EXPECT_LE(c.ones(), prev_ones);
      // Labels inside clusters are exactly the diagonal 1-cells.
      EXPECT_LE(p.diagonal(), prev_clustered);
      prev_ones = c.ones();
      prev_clustered = p.diagonal();
    }
  }
}

TEST(Properties, ClusterSizesNonIncreasingInThreshold) {
  // For a clipped matrix at a higher threshold, each of its clusters is
  // also all-pairs-1 at the lower threshold, so the largest cluster found
  // at the lower threshold by an exhaustive search can only shrink.
  Rng rng(61);
  auto max_clique = [](const ClippedMatrix& c) {
    int best = 0;
    const int L = c.labels;
    for (unsigned s = 1; s < (1u << L); ++s) {
      bool ok = true;
      for (int i = 0; i < L && ok; ++i)
        if (s >> i & 1u)
          for (int j = 0; j < L && ok; ++j)
            if ((s >> j & 1u) && !c.at(i, j)) ok = false;
      if (ok) best = std::max(best, __builtin_popcount(s));
    }
    return best;
  };
  for (int trial = 0; trial < 100; ++trial) {
    const int L = rng.range(3, 9);
    FieldMatrix m;
    m.labels = L;
    m.values.resize(static_cast<std::size_t>(L) * L);
    for (auto& v : m.values) v = rng.uniform(0, 1);
    m.normalized = true;
    int prev = L + 1;
    for (double th = 0.1; th < 1.0; th += 0.1) {
      const auto c = clip(m, th);
      const int k = max_clique(c);
      EXPECT_LE(k, prev);
      for (const auto& cl : find_clusters(c).clusters) EXPECT_LE(cl.size(), k);
      prev = k;
    }
  }
}

}  // namespace
}  // namespace afcc::metrics
