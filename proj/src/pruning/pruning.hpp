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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "metrics/filter_metrics.hpp"
#include "nn/connection_mask.hpp"

namespace afcc::pruning {

enum class Scheme { kAfcc, kArtificialAfcc, kRandomFilter, kRandomWeight, kFcNode };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

// keep(j, i) = 1 iff the label unions of next filter j and previous filter i
// intersect. Dead filters (empty union) end up with all-zero rows/columns.
ConnectionMask afcc_mask(std::span<const metrics::FilterProfile> prev,
                         std::span<const metrics::FilterProfile> next);

// Same rule on raw label sets (one sorted set per unit).
ConnectionMask intersection_mask(std::span<const std::vector<int>> prev_sets,
                                 std::span<const std::vector<int>> next_sets);

// Readout from the last feature layer: keep(y, f) = 1 iff y is in f's union.
ConnectionMask afcc_output_mask(std::span<const metrics::FilterProfile> last, int num_labels);

// One artificial contiguous (wrapped) label block per filter.
struct LabelAssignment {
  int cluster_size = 0;
  std::vector<std::vector<int>> labels;  // per filter, sorted
  std::vector<int> coverage;             // per label

  int coverage_spread() const;  // max - min coverage
};

// `filter_counts` lists layers bottom to top. The top layer gets
// `base_size`, each layer below it `increment` more. Filter f of a layer
// covers labels offset + f*size ... offset + (f+1)*size - 1 (mod L), with a
// seed-driven starting offset per layer, so coverage differs by <= 1.
std::vector<LabelAssignment> a_afcc_assign(std::span<const int> filter_counts, int base_size,
                                           int increment, int num_labels, std::uint64_t seed);

// Intersection masks between consecutive assigned layers; result[k] links
// layer k to layer k + 1. Throws if a mask keeps nothing.
std::vector<ConnectionMask> a_afcc_masks(std::span<const LabelAssignment> assignments);

// Each filter pair dropped independently with probability `rate`.
ConnectionMask r_afcc_filter_mask(int rows, int cols, double rate, std::uint64_t seed);

// Each weight dropped independently with probability `rate`. `rows` are
// output units, `cols` the per-unit fan-in.
ConnectionMask r_afcc_weight_mask(int rows, int cols, double rate, std::uint64_t seed);

struct NodeMaskResult {
  ConnectionMask mask;
  std::vector<int> removed_prev;  // node ids
  std::vector<int> removed_next;
};

// Intersection rule between two fully connected layers. Nodes without
// clusters are noise nodes: with `remove_noise_nodes` they lose every
// connection, otherwise they stay fully connected.
NodeMaskResult fc_node_mask(std::span<const metrics::FilterProfile> prev,
                            std::span<const metrics::FilterProfile> next,
                            bool remove_noise_nodes);

// Probability that a unit with `d_next` labels shares none with a unit of
// `d_prev` labels when the next unit's labels are drawn independently and
// uniformly: (1 - d_prev / L)^d_next. Real-valued sizes are allowed.
double estimate_dilution(double d_prev, double d_next, int num_labels);

// 1 - kept / total.
double measured_dilution(const ConnectionMask& mask);

// Units whose row (inbound) or column (outbound) keeps nothing, among units
// that keep at least one connection on the other side.
struct ConnectivityReport {
  std::vector<int> rows_without_inbound;
  std::vector<int> cols_without_outbound;
};
ConnectivityReport check_connectivity(const ConnectionMask& mask);

}  // namespace afcc::pruning
