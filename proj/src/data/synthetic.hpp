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
#include <utility>

#include "data/dataset.hpp"

namespace afcc::data {

// Procedural 10-class 3x32x32 image set. Label = shape + 5 * palette with
// five glyph shapes (disk, square, triangle, cross, ring) and two hue
// families (warm, cool), so labels share visual attributes in overlapping
// groups. Scenes carry a textured background, pixel noise and optional
// smaller distractor glyphs.
struct SyntheticOptions {
  int train = 10000;
  int test = 2000;
  std::uint64_t seed = 20240601;
  double noise_sigma = 28.0;       // per-pixel Gaussian noise, 8-bit units
  double distractor_prob = 0.6;    // chance of each of up to two distractors
  double hue_spread = 55.0;        // half-width of each palette's hue band, degrees
  double min_radius = 5.0;
  double max_radius = 9.0;
};

inline constexpr int kSyntheticLabels = 10;

std::pair<DatasetSplit, DatasetSplit> make_synthetic(const SyntheticOptions& options);

}  // namespace afcc::data
