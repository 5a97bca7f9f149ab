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
#include <utility>
#include <vector>

#include "probe/probe.hpp"

namespace afcc::metrics {

// L x L aggregated output fields of one filter/node: cell (i, j) is the sum
// of output field j over every input whose true label is i.
struct FieldMatrix {
  int labels = 0;
  std::vector<double> values;  // row-major
  bool normalized = false;
  bool dead = false;  // set by normalize() when no entry is positive

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * labels + j]; }
  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * labels + j]; }
};

struct ClippedMatrix {
  int labels = 0;
  double threshold = 0.0;
  std::vector<std::uint8_t> bits;  // 1 where normalized value >= threshold
  std::vector<std::pair<int, int>> negative_extreme;  // cells <= -threshold

  bool at(int i, int j) const { return bits[static_cast<std::size_t>(i) * labels + j] != 0; }
  std::size_t ones() const;
};

struct Cluster {
  std::vector<int> labels;  // in join order
  int size() const { return static_cast<int>(labels.size()); }
};

struct FilterProfile {
  int filter_id = 0;
  std::vector<Cluster> clusters;
  int noise_count = 0;
  std::vector<int> label_union;  // sorted

  bool dead() const { return clusters.empty(); }
  int diagonal() const { return static_cast<int>(label_union.size()); }
};

struct LayerStats {
  int filters = 0;
  double n_c = 0.0;       // mean clusters per filter (dead filters count as 0)
  double c_s = 0.0;       // mean cluster size over all clusters of the layer
  double diagonal = 0.0;  // n_c * c_s
  double noise = 0.0;     // mean noise cells per filter
};

// Field matrix of a single filter: the readout restricted to the feature
// positions of channel `filter`. Throws if some label has no records.
FieldMatrix single_filter_fields(const probe::ProbeSpec& probe, int filter,
                                 const probe::FeatureSet& data);

// All filters of the cut layer in one pass over the data.
std::vector<FieldMatrix> all_filter_fields(const probe::ProbeSpec& probe,
                                           const probe::FeatureSet& data);

// The unrestricted probe's matrix; equals the sum over filters.
FieldMatrix full_probe_fields(const probe::ProbeSpec& probe, const probe::FeatureSet& data);

// True when per-label record counts deviate from the mean by more than 5%.
bool labels_imbalanced(std::span<const int> labels, int num_labels);

// Divides by the maximum entry. A matrix whose maximum is <= 0 is returned
// unscaled and flagged dead.
FieldMatrix normalize(const FieldMatrix& m);

// bits(i, j) = value >= th (inclusive at the threshold). Dead matrices clip
// to all zeros.
ClippedMatrix clip(const FieldMatrix& m, double th);

// Greedy diagonal scan. Labels are visited in `order` (ascending when
// empty); each label with a 1 on the diagonal joins the earliest-opened
// cluster whose members all pair with it in both directions, otherwise it
// opens a new cluster. Noise is every 1-cell outside the cluster blocks.
FilterProfile find_clusters(const ClippedMatrix& clipped, std::span<const int> order = {},
                            int filter_id = 0);

// Label order that makes every cluster a contiguous diagonal block, and the
// clipped matrix with rows and columns permuted accordingly.
// perm[k] = original label shown at position k.
std::pair<std::vector<int>, ClippedMatrix> permute_for_display(const ClippedMatrix& clipped,
                                                               const FilterProfile& profile);

ClippedMatrix permute(const ClippedMatrix& m, std::span<const int> perm);
std::vector<int> invert_permutation(std::span<const int> perm);

LayerStats layer_stats(std::span<const FilterProfile> profiles);

// Runs normalize -> clip -> find_clusters on every matrix.
std::vector<FilterProfile> profile_layer(std::span<const FieldMatrix> matrices, double th);

std::string to_csv(const FieldMatrix& m);
std::string to_csv(const ClippedMatrix& m);

// Binary PPM (P6) of the permuted clipped matrix: white = cluster cell,
// yellow = above-threshold noise, green = value <= -th, black otherwise.
std::vector<std::uint8_t> render_ppm(const ClippedMatrix& clipped, const FilterProfile& profile,
                                     int cell_pixels = 4);

}  // namespace afcc::metrics
