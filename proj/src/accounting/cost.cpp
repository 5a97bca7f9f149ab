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

#include "accounting/cost.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "common/error.hpp"

namespace afcc::accounting {

double layer_params(const nn::LayerSpec& layer, double survival) {
  require(survival >= 0.0 && survival <= 1.0, "survival must lie in [0, 1]");
  if (const auto* c = std::get_if<nn::Conv2D>(&layer))
    return static_cast<double>(c->weight_count()) * survival +
           (c->has_bias ? c->out_channels : 0);
  if (const auto* d = std::get_if<nn::Dense>(&layer))
    return static_cast<double>(d->weight_count()) * survival +
           (d->has_bias ? d->out_features : 0);
  return 0.0;
}

double layer_macs(const nn::LayerSpec& layer, const nn::Shape3& output, double survival) {
  require(survival >= 0.0 && survival <= 1.0, "survival must lie in [0, 1]");
  if (const auto* c = std::get_if<nn::Conv2D>(&layer))
    return static_cast<double>(output.spatial()) * static_cast<double>(c->weight_count()) *
           survival;
  if (const auto* d = std::get_if<nn::Dense>(&layer))
    return static_cast<double>(d->weight_count()) * survival;
  return 0.0;
}

NetworkCost network_cost(const nn::NetworkSpec& spec,
                         std::span<const std::vector<std::uint8_t>> weight_masks) {
  const auto shapes = spec.output_shapes();
  NetworkCost cost;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& layer = spec.layers[i];
    if (!nn::has_params(layer)) continue;
    LayerCost lc;
    lc.layer = static_cast<int>(i);
    if (i < weight_masks.size() && !weight_masks[i].empty()) {
      const auto& m = weight_masks[i];
      const auto kept = std::accumulate(m.begin(), m.end(), std::size_t{0});
      lc.survival = static_cast<double>(kept) / static_cast<double>(m.size());
    }
    lc.params_dense = layer_params(layer, 1.0);
    lc.params_masked = layer_params(layer, lc.survival);
    if (i < weight_masks.size() && !weight_masks[i].empty()) {
      // A unit whose inbound weights are all masked loses its bias too.
      const auto& m = weight_masks[i];
      const int units = shapes[i].channels;
      const bool bias = nn::layer_has_bias(layer);
      const std::size_t fan_in = m.size() / static_cast<std::size_t>(units);
      for (int u = 0; bias && u < units; ++u) {
        const auto row = m.begin() + static_cast<std::ptrdiff_t>(u * fan_in);
        if (std::find(row, row + static_cast<std::ptrdiff_t>(fan_in), 1) == row + static_cast<std::ptrdiff_t>(fan_in))
          lc.params_masked -= 1.0;
      }
    }
    lc.macs_dense = layer_macs(layer, shapes[i], 1.0);
    lc.macs_masked = layer_macs(layer, shapes[i], lc.survival);
    cost.params_dense += lc.params_dense;
    cost.params_masked += lc.params_masked;
    cost.macs_dense += lc.macs_dense;
    cost.macs_masked += lc.macs_masked;
    cost.layers.push_back(lc);
  }
  return cost;
}

std::string cost_csv(const NetworkCost& cost) {
  std::ostringstream os;
  os.precision(12);
  os << "layer,params_dense,params_masked,macs_dense,macs_masked,survival\n";
  for (const auto& l : cost.layers)
    os << l.layer << ',' << l.params_dense << ',' << l.params_masked << ',' << l.macs_dense
       << ',' << l.macs_masked << ',' << l.survival << '\n';
  os << "total," << cost.params_dense << ',' << cost.params_masked << ',' << cost.macs_dense
     << ',' << cost.macs_masked << ",\n";
  os << "# flops = 2 x macs; dense " << cost.flops_dense() << ", masked " << cost.flops_masked()
     << '\n';
  return os.str();
}

nn::NetworkSpec vgg11_spec(int num_labels) {
  nn::NetworkSpec spec;
  spec.input = {3, 32, 32};
  spec.num_labels = num_labels;
  int in = 3;
  const int plan[] = {64, 64, 0, 128, 128, 0, 256, 256, 256, 0, 512, 512, 512};
  for (int c : plan) {
    if (c == 0) {
      spec.layers.emplace_back(nn::MaxPool{2, 2});
      continue;
    }
    spec.layers.emplace_back(nn::Conv2D{in, c, 3, 3, 1, 1, true});
    spec.layers.emplace_back(nn::ReLU{});
    in = c;
  }
  spec.layers.emplace_back(nn::Flatten{});
  spec.layers.emplace_back(nn::Dense{512 * 4 * 4, num_labels, false});
  return spec;
}

}  // namespace afcc::accounting
