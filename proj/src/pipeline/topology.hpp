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

#include <vector>

#include "nn/layer_spec.hpp"

namespace afcc::pipeline {

// A probe point: the output of `cut_layer`, whose channels/nodes are the
// units of weight layer `owner`.
struct Tap {
  int cut_layer = 0;
  int owner = 0;
  bool dense = false;
  int units = 0;
};

// A prunable connection set: the weights of `layer` read the units of tap
// `prev` and feed tap `next` (-1: the output layer).
struct Link {
  int prev = 0;
  int next = -1;
  int layer = 0;
};

// Conv layers in the upper half of the weight-bearing hidden stack plus
// every hidden dense layer; each tapped after its trailing ReLU/pooling.
std::vector<int> auto_probe_layers(const nn::NetworkSpec& spec);

// Resolves cut layers to taps. Throws if a cut has no weight layer feeding
// it through activations/pooling only.
std::vector<Tap> resolve_taps(const nn::NetworkSpec& spec, const std::vector<int>& cut_layers);

// Links between consecutive taps that are joined by exactly one weight
// layer, plus the readout link from the last tap when it feeds the output.
std::vector<Link> find_links(const nn::NetworkSpec& spec, const std::vector<Tap>& taps);

}  // namespace afcc::pipeline
