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
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "nn/connection_mask.hpp"
#include "nn/network.hpp"

namespace afcc::nn {

// A connection mask attached to the weights of `layer`. `source_layer` is
// the layer whose units form the mask columns (-1 for weight masks).
struct MaskRecord {
  int layer = 0;
  int source_layer = -1;
  std::string scheme;
  std::uint64_t seed = 0;
  double rate = 0.0;
  ConnectionMask mask;
};

struct Checkpoint {
  Network<float> net;
  int epoch = 0;
  std::uint64_t seed = 0;
  std::vector<MaskRecord> masks;
  nlohmann::json meta = nlohmann::json::object();  // free-form manifest extras

  // Expands every MaskRecord into weight-level masks on `net`. A unit left
  // with no inbound connection also loses its bias.
  void install_masks();

  // Content hash over weights, biases and masks.
  std::uint64_t fingerprint() const;
};

// Weight-level mask for `layer` from a filter-pair or weight mask.
std::vector<std::uint8_t> expand_for_layer(const Network<float>& net, int layer,
                                           const ConnectionMask& mask);

nlohmann::json spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const nlohmann::json& j);

// Writes <stem>.json (manifest), <stem>.bin (float32 LE tensors in layer
// order) and, when masks exist, <stem>.masks.bin (bit-packed).
void save_checkpoint(const std::filesystem::path& stem, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& stem);

std::filesystem::path manifest_path(const std::filesystem::path& stem);
bool checkpoint_exists(const std::filesystem::path& stem);

}  // namespace afcc::nn
