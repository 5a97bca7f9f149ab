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

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace afcc {

enum class Granularity { kFilterPair, kWeight };

std::string to_string(Granularity g);
Granularity granularity_from_string(const std::string& s);

// Keep/drop matrix between two layers, rows = units of the consuming layer,
// cols = units of the producing layer. For weight granularity the matrix is
// the flattened weight tensor (rows = output units, cols = fan-in).
struct ConnectionMask {
  int rows = 0;
  int cols = 0;
  Granularity granularity = Granularity::kFilterPair;
  std::vector<std::uint8_t> keep;  // row-major, 0/1

  ConnectionMask() = default;
  ConnectionMask(int r, int c, Granularity g, bool fill)
      : rows(r), cols(c), granularity(g),
        keep(static_cast<std::size_t>(r) * c, fill ? 1 : 0) {}

  std::uint8_t at(int r, int c) const {
    return keep[static_cast<std::size_t>(r) * cols + c];
  }
  void set(int r, int c, bool v) {
    keep[static_cast<std::size_t>(r) * cols + c] = v ? 1 : 0;
  }

  std::size_t total() const { return keep.size(); }
  std::size_t kept() const;
  double dilution_rate() const;

  // Replicates every entry over `block` consecutive fan-in positions: a
  // conv filter pair covers a kh*kw kernel, a flattened channel covers its
  // h*w spatial positions.
  ConnectionMask expand(int block) const;

  bool operator==(const ConnectionMask&) const = default;
};

// Bit-packed, LSB-first within each byte.
std::vector<std::uint8_t> pack_bits(const std::vector<std::uint8_t>& bits);
std::vector<std::uint8_t> unpack_bits(const std::uint8_t* data, std::size_t nbits);

}  // namespace afcc
