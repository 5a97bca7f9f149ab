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

#include "pruning/pruning.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace afcc::pruning {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::kAfcc: return "afcc";
    case Scheme::kArtificialAfcc: return "a-afcc";
    case Scheme::kRandomFilter: return "r-afcc-filter";
    case Scheme::kRandomWeight: return "r-afcc-weight";
    case Scheme::kFcNode: return "fc-node";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& s) {
  for (auto sc : {Scheme::kAfcc, Scheme::kArtificialAfcc, Scheme::kRandomFilter,
                  Scheme::kRandomWeight, Scheme::kFcNode})
    if (to_string(sc) == s) return sc;
  throw Error(ErrorCode::kInvalidArgument, "unknown pruning scheme '" + s + "'");
}

namespace {

bool intersects(const std::vector<int>& a, const std::vector<int>& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

std::vector<std::vector<int>> unions(std::span<const metrics::FilterProfile> ps) {
  std::vector<std::vector<int>> out;
  out.reserve(ps.size());
  for (const auto& p : ps) out.push_back(p.label_union);
  return out;
}

}  // namespace

ConnectionMask intersection_mask(std::span<const std::vector<int>> prev_sets,
                                 std::span<const std::vector<int>> next_sets) {
  if (prev_sets.empty() || next_sets.empty())
    throw Error(ErrorCode::kInvalidArgument, "empty profile list");
  ConnectionMask m(static_cast<int>(next_sets.size()), static_cast<int>(prev_sets.size()),
                   Granularity::kFilterPair, false);
  for (int j = 0; j < m.rows; ++j)
    for (int i = 0; i < m.cols; ++i)
      if (intersects(next_sets[static_cast<std::size_t>(j)], prev_sets[static_cast<std::size_t>(i)]))
        m.set(j, i, true);
  return m;
}

ConnectionMask afcc_mask(std::span<const metrics::FilterProfile> prev,
                         std::span<const metrics::FilterProfile> next) {
  const auto a = unions(prev);
  const auto b = unions(next);
  return intersection_mask(a, b);
}

ConnectionMask afcc_output_mask(std::span<const metrics::FilterProfile> last, int num_labels) {
  require(num_labels > 0, "num_labels must be positive");
  if (last.empty()) throw Error(ErrorCode::kInvalidArgument, "empty profile list");
  ConnectionMask m(num_labels, static_cast<int>(last.size()), Granularity::kFilterPair, false);
  for (int f = 0; f < m.cols; ++f)
    for (int y : last[static_cast<std::size_t>(f)].label_union)
      if (y >= 0 && y < num_labels) m.set(y, f, true);
  return m;
}

int LabelAssignment::coverage_spread() const {
  if (coverage.empty()) return 0;
  const auto [lo, hi] = std::minmax_element(coverage.begin(), coverage.end());
  return *hi - *lo;
}

std::vector<LabelAssignment> a_afcc_assign(std::span<const int> filter_counts, int base_size,
                                           int increment, int num_labels, std::uint64_t seed) {
  require(base_size >= 1, "base cluster size must be >= 1");
  require(increment >= 0, "increment must be >= 0");
  require(num_labels >= 1, "num_labels must be positive");
  const int depth = static_cast<int>(filter_counts.size());
  require(depth >= 1, "need at least one layer");
  const int largest = base_size + (depth - 1) * increment;
  if (largest > num_labels)
    throw Error(ErrorCode::kInvalidArgument,
                "cluster size " + std::to_string(largest) + " exceeds " +
                    std::to_string(num_labels) + " labels; even coverage infeasible");

  Rng rng(seed);
  std::vector<LabelAssignment> out(static_cast<std::size_t>(depth));
  for (int k = 0; k < depth; ++k) {
    auto& a = out[static_cast<std::size_t>(k)];
    a.cluster_size = base_size + (depth - 1 - k) * increment;
    a.coverage.assign(static_cast<std::size_t>(num_labels), 0);
    const int offset = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_labels)));
    const int filters = filter_counts[static_cast<std::size_t>(k)];
    require(filters >= 1, "layer needs at least one filter");
    for (int f = 0; f < filters; ++f) {
      std::vector<int> labels;
      for (int t = 0; t < a.cluster_size; ++t) {
        const long pos = static_cast<long>(f) * a.cluster_size + t + offset;
        labels.push_back(static_cast<int>(pos % num_labels));
      }
      std::sort(labels.begin(), labels.end());
      for (int l : labels) ++a.coverage[static_cast<std::size_t>(l)];
      a.labels.push_back(std::move(labels));
    }
  }
  return out;
}

std::vector<ConnectionMask> a_afcc_masks(std::span<const LabelAssignment> assignments) {
  std::vector<ConnectionMask> out;
  for (std::size_t k = 0; k + 1 < assignments.size(); ++k) {
    auto m = intersection_mask(assignments[k].labels, assignments[k + 1].labels);
    if (m.kept() == 0)
      throw Error(ErrorCode::kPrerequisite, "a-afcc mask between assigned layers " +
                                                std::to_string(k) + " and " +
                                                std::to_string(k + 1) +
                                                " keeps no connection (no signal path)");
    out.push_back(std::move(m));
  }
  return out;
}

namespace {

ConnectionMask bernoulli_mask(int rows, int cols, double rate, std::uint64_t seed, Granularity g) {
  require(rows > 0 && cols > 0, "mask dimensions must be positive");
  require(rate >= 0.0 && rate <= 1.0, "rate must lie in [0, 1]");
  ConnectionMask m(rows, cols, g, true);
  Rng rng(seed);
  for (auto& k : m.keep) k = rng.uniform() < rate ? 0 : 1;
  return m;
}

}  // namespace

ConnectionMask r_afcc_filter_mask(int rows, int cols, double rate, std::uint64_t seed) {
  return bernoulli_mask(rows, cols, rate, seed, Granularity::kFilterPair);
}

ConnectionMask r_afcc_weight_mask(int rows, int cols, double rate, std::uint64_t seed) {
  return bernoulli_mask(rows, cols, rate, seed, Granularity::kWeight);
}

NodeMaskResult fc_node_mask(std::span<const metrics::FilterProfile> prev,
                            std::span<const metrics::FilterProfile> next, bool remove_noise_nodes) {
  if (prev.empty() || next.empty()) throw Error(ErrorCode::kInvalidArgument, "empty profile list");
  NodeMaskResult r;
  r.mask = ConnectionMask(static_cast<int>(next.size()), static_cast<int>(prev.size()),
                          Granularity::kFilterPair, false);
  for (int i = 0; i < r.mask.cols; ++i)
    if (prev[static_cast<std::size_t>(i)].dead()) r.removed_prev.push_back(i);
  for (int j = 0; j < r.mask.rows; ++j)
    if (next[static_cast<std::size_t>(j)].dead()) r.removed_next.push_back(j);
  for (int j = 0; j < r.mask.rows; ++j) {
    const auto& nj = next[static_cast<std::size_t>(j)];
    for (int i = 0; i < r.mask.cols; ++i) {
      const auto& pi = prev[static_cast<std::size_t>(i)];
      bool keep;
      if (nj.dead() || pi.dead())
        keep = !remove_noise_nodes;
      else
        keep = intersects(nj.label_union, pi.label_union);
      r.mask.set(j, i, keep);
    }
  }
  if (!remove_noise_nodes) {
    r.removed_prev.clear();
    r.removed_next.clear();
  }
  return r;
}

double estimate_dilution(double d_prev, double d_next, int num_labels) {
  require(num_labels > 0, "num_labels must be positive");
  require(d_prev >= 0.0 && d_prev <= num_labels && d_next >= 0.0 && d_next <= num_labels,
          "diagonal sizes must lie in [0, L]");
  const double r = std::pow(1.0 - d_prev / num_labels, d_next);
  return std::clamp(r, 0.0, 1.0);
}

double measured_dilution(const ConnectionMask& mask) { return mask.dilution_rate(); }

ConnectivityReport check_connectivity(const ConnectionMask& mask) {
  ConnectivityReport rep;
  std::vector<int> row_kept(static_cast<std::size_t>(mask.rows), 0);
  std::vector<int> col_kept(static_cast<std::size_t>(mask.cols), 0);
  for (int r = 0; r < mask.rows; ++r)
    for (int c = 0; c < mask.cols; ++c)
      if (mask.at(r, c)) {
        ++row_kept[static_cast<std::size_t>(r)];
        ++col_kept[static_cast<std::size_t>(c)];
      }
  for (int r = 0; r < mask.rows; ++r)
    if (row_kept[static_cast<std::size_t>(r)] == 0) rep.rows_without_inbound.push_back(r);
  for (int c = 0; c < mask.cols; ++c)
    if (col_kept[static_cast<std::size_t>(c)] == 0) rep.cols_without_outbound.push_back(c);
  return rep;
}

}  // namespace afcc::pruning
