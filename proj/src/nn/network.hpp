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
#include <set>
#include <span>
#include <vector>

#include "nn/layer_spec.hpp"

namespace afcc::nn {

// Weights of one Conv2D/Dense layer. Conv weights are laid out
// [out][in][kh][kw], dense weights [out][in]. An empty mask means the layer
// is unmasked; otherwise masked entries of `weight`/`bias` are held at 0.
template <class T>
struct LayerParams {
  std::vector<T> weight;
  std::vector<T> bias;
  std::vector<std::uint8_t> weight_mask;
  std::vector<std::uint8_t> bias_mask;

  bool empty() const { return weight.empty(); }
};

template <class T>
struct Gradients {
  std::vector<std::vector<T>> weight;  // per layer; empty when frozen / no params
  std::vector<std::vector<T>> bias;
  double loss = 0.0;
};

// Activations kept by forward() for backward(). acts[0] is the input batch,
// acts[i + 1] the output of layer i.
template <class T>
struct ForwardCache {
  int batch = 0;
  std::vector<std::vector<T>> acts;
  std::vector<std::vector<std::int32_t>> argmax;
};

using LayerSet = std::set<int>;

template <class T>
class Network {
 public:
  Network() = default;
  explicit Network(NetworkSpec spec);

  // Weights ~ U(-b, b) with b = sqrt(6 / fan_in) for hidden layers and
  // sqrt(1 / fan_in) for the readout; biases start at zero.
  void initialize(std::uint64_t seed);

  const NetworkSpec& spec() const { return spec_; }
  const std::vector<Shape3>& shapes() const { return shapes_; }
  int num_layers() const { return static_cast<int>(spec_.layers.size()); }

  LayerParams<T>& params(int layer) { return params_.at(static_cast<std::size_t>(layer)); }
  const LayerParams<T>& params(int layer) const {
    return params_.at(static_cast<std::size_t>(layer));
  }

  // Runs layers [0, last] (whole net when last < 0) on `n` samples and
  // returns the output of `last`. Fills `cache` when given.
  std::vector<T> forward(std::span<const T> batch, int n,
                         ForwardCache<T>* cache = nullptr, int last = -1) const;

  // Mean softmax cross-entropy gradients for the batch held by `cache`.
  // Frozen layers get no parameter gradients but still pass gradients to
  // their inputs; masked entries come back as exactly 0.
  Gradients<T> backward(const ForwardCache<T>& cache, std::span<const int> labels,
                        const LayerSet& frozen = {}) const;

  // Installs a weight-level mask (and optional bias mask) and zeroes the
  // dropped entries.
  void install_mask(int layer, std::vector<std::uint8_t> weight_mask,
                    std::vector<std::uint8_t> bias_mask = {});
  void clear_mask(int layer);
  void apply_masks();

  template <class U>
  Network<U> cast() const {
    Network<U> out(spec_);
    for (int i = 0; i < num_layers(); ++i) {
      const auto& src = params(i);
      auto& dst = out.params(i);
      dst.weight.assign(src.weight.begin(), src.weight.end());
      dst.bias.assign(src.bias.begin(), src.bias.end());
      dst.weight_mask = src.weight_mask;
      dst.bias_mask = src.bias_mask;
    }
    return out;
  }

  bool operator==(const Network& o) const {
    if (shapes_ != o.shapes_ || params_.size() != o.params_.size()) return false;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto& a = params_[i];
      const auto& b = o.params_[i];
      if (a.weight != b.weight || a.bias != b.bias || a.weight_mask != b.weight_mask ||
          a.bias_mask != b.bias_mask)
        return false;
    }
    return true;
  }

 private:
  NetworkSpec spec_;
  std::vector<Shape3> shapes_;
  std::vector<LayerParams<T>> params_;
};

// Mean cross-entropy of `logits` (n x labels); accumulated in double.
template <class T>
double mean_cross_entropy(std::span<const T> logits, std::span<const int> labels,
                          int num_labels);

template <class T>
int argmax_row(std::span<const T> row);

extern template class Network<float>;
extern template class Network<double>;

}  // namespace afcc::nn
