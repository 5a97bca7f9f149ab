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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nn/connection_mask.hpp"
#include "nn/layer_spec.hpp"

namespace afcc::accounting {

// MACs are the primitive unit; FLOPs are reported as 2 x MACs.
struct LayerCost {
  int layer = 0;
  double params_dense = 0.0;
  double params_masked = 0.0;
  double macs_dense = 0.0;
  double macs_masked = 0.0;
  double survival = 1.0;
};

// Conv: kh*kw*in*out*survival (+ out biases, unscaled). Dense: in*out*survival
// (+ biases). Layers without weights cost 0.
double layer_params(const nn::LayerSpec& layer, double survival);

// Conv: Hout*Wout*kh*kw*in*out*survival. Dense: in*out*survival.
// Pooling and activations are not counted.
double layer_macs(const nn::LayerSpec& layer, const nn::Shape3& output, double survival);

struct NetworkCost {
  std::vector<LayerCost> layers;  // weight-bearing layers only
  double params_dense = 0.0;
  double params_masked = 0.0;
  double macs_dense = 0.0;
  double macs_masked = 0.0;

  double flops_dense() const { return 2.0 * macs_dense; }
  double flops_masked() const { return 2.0 * macs_masked; }
};

// `weight_masks[i]` is the weight-level keep mask of layer i (empty when
// unmasked). Survival per layer is the kept fraction of its weights; a unit
// with no kept inbound weight also drops its bias from params_masked.
NetworkCost network_cost(const nn::NetworkSpec& spec,
                         std::span<const std::vector<std::uint8_t>> weight_masks = {});

// Cost section CSV: layer,params_dense,params_masked,macs_dense,macs_masked,survival
std::string cost_csv(const NetworkCost& cost);

// Reference constants for report footers.
inline constexpr double kVgg11DenseGMacs = 0.286;
inline constexpr double kVgg11AfccGMacs = 0.197;
inline constexpr double kVgg11ArtificialGMacs = 0.222;

// VGG-11 as used for CIFAR-100: the first ten 3x3 conv layers of VGG-16
// (64,64,M,128,128,M,256,256,256,M,512,512,512) and a single bias-free
// 8192 -> num_labels readout.
nn::NetworkSpec vgg11_spec(int num_labels = 100);

}  // namespace afcc::accounting
