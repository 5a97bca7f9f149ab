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

#include "pipeline/topology.hpp"

#include <string>
#include <variant>

#include "common/error.hpp"

namespace afcc::pipeline {

namespace {

bool passthrough(const nn::LayerSpec& l) {
  return std::holds_alternative<nn::ReLU>(l) || std::holds_alternative<nn::MaxPool>(l);
}

// The weight layer reading the output of `cut`, if only passthrough
// layers or a Flatten sit in between; -1 otherwise.
int next_weight_layer(const nn::NetworkSpec& spec, int cut) {
  for (int i = cut + 1; i < static_cast<int>(spec.layers.size()); ++i) {
    const auto& l = spec.layers[static_cast<std::size_t>(i)];
    if (nn::has_params(l)) return i;
    if (!passthrough(l) && !std::holds_alternative<nn::Flatten>(l)) return -1;
  }
  return -1;
}

}  // namespace

std::vector<int> auto_probe_layers(const nn::NetworkSpec& spec) {
  const int n = static_cast<int>(spec.layers.size());
  std::vector<int> hidden;
  for (int i = 0; i < n - 1; ++i)
    if (nn::has_params(spec.layers[static_cast<std::size_t>(i)])) hidden.push_back(i);
  std::vector<int> cuts;
  const int count = static_cast<int>(hidden.size());
  for (int k = 0; k < count; ++k) {
    const int i = hidden[static_cast<std::size_t>(k)];
    const bool dense = std::holds_alternative<nn::Dense>(spec.layers[static_cast<std::size_t>(i)]);
    if (!dense && 2 * (k + 1) < count) continue;
    int cut = i;
    while (cut + 1 < n - 1 && passthrough(spec.layers[static_cast<std::size_t>(cut + 1)])) ++cut;
    cuts.push_back(cut);
  }
  return cuts;
}

std::vector<Tap> resolve_taps(const nn::NetworkSpec& spec, const std::vector<int>& cut_layers) {
  const int n = static_cast<int>(spec.layers.size());
  const auto shapes = spec.output_shapes();
  std::vector<Tap> taps;
  for (int cut : cut_layers) {
    if (cut < 0 || cut > n - 2)
      throw Error(ErrorCode::kInvalidArgument,
                  "cut layer " + std::to_string(cut) + " outside [0, " + std::to_string(n - 2) + "]");
    int owner = cut;
    while (owner >= 0 && passthrough(spec.layers[static_cast<std::size_t>(owner)])) --owner;
    if (owner < 0 || !nn::has_params(spec.layers[static_cast<std::size_t>(owner)]))
      throw Error(ErrorCode::kInvalidArgument,
                  "cut layer " + std::to_string(cut) + " is not fed by a conv or dense layer");
    Tap t;
    t.cut_layer = cut;
    t.owner = owner;
    t.dense = std::holds_alternative<nn::Dense>(spec.layers[static_cast<std::size_t>(owner)]);
    t.units = shapes[static_cast<std::size_t>(cut)].channels;
    taps.push_back(t);
  }
  return taps;
}

std::vector<Link> find_links(const nn::NetworkSpec& spec, const std::vector<Tap>& taps) {
  std::vector<Link> links;
  const int output = static_cast<int>(spec.layers.size()) - 1;
  for (std::size_t k = 0; k < taps.size(); ++k) {
    const int reader = next_weight_layer(spec, taps[k].cut_layer);
    if (reader < 0) continue;
    if (reader == output) {
      links.push_back({static_cast<int>(k), -1, reader});
    } else if (k + 1 < taps.size() && taps[k + 1].owner == reader) {
      links.push_back({static_cast<int>(k), static_cast<int>(k + 1), reader});
    }
  }
  return links;
}

}  // namespace afcc::pipeline
