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

#include "nn/connection_mask.hpp"

#include <numeric>

#include "common/error.hpp"

namespace afcc {

std::string to_string(Granularity g) {
  return g == Granularity::kFilterPair ? "filter-pair" : "weight";
}

Granularity granularity_from_string(const std::string& s) {
  if (s == "filter-pair") return Granularity::kFilterPair;
  if (s == "weight") return Granularity::kWeight;
  throw Error(ErrorCode::kFormat, "unknown mask granularity '" + s + "'");
}

std::size_t ConnectionMask::kept() const {
  return std::accumulate(keep.begin(), keep.end(), std::size_t{0});
}

double ConnectionMask::dilution_rate() const {
  if (keep.empty()) return 0.0;
  return 1.0 - static_cast<double>(kept()) / static_cast<double>(total());
}

ConnectionMask ConnectionMask::expand(int block) const {
  require(block >= 1, "expansion block must be positive");
  ConnectionMask out(rows, cols * block, Granularity::kWeight, false);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (at(r, c))
        for (int k = 0; k < block; ++k) out.set(r, c * block + k, true);
  return out;
}

std::vector<std::uint8_t> pack_bits(const std::vector<std::uint8_t>& bits) {
  std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  return out;
}

std::vector<std::uint8_t> unpack_bits(const std::uint8_t* data, std::size_t nbits) {
  std::vector<std::uint8_t> out(nbits);
  for (std::size_t i = 0; i < nbits; ++i) out[i] = (data[i / 8] >> (i % 8)) & 1u;
  return out;
}

}  // namespace afcc
