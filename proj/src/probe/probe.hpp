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
#include <vector>

#include "nn/layer_spec.hpp"
#include "nn/network.hpp"
#include "nn/optimizer.hpp"
#include "nn/trainer.hpp"

namespace afcc::probe {

// Bias-free linear readout from the output of layer `cut_layer` of a frozen
// backbone to the label outputs. `readout` is [labels][feature_dim].
struct ProbeSpec {
  int cut_layer = 0;
  nn::Shape3 feature_shape;  // output shape of the cut layer
  int num_labels = 0;
  std::vector<float> readout;
  std::uint64_t backbone_fingerprint = 0;

  int feature_dim() const { return static_cast<int>(feature_shape.size()); }
  // Feature positions belonging to one filter (channel) of the cut layer.
  int positions_per_unit() const { return static_cast<int>(feature_shape.spatial()); }
  int num_units() const { return feature_shape.channels; }
};

// Layers a probe may cut after: every layer except the output layer.
int max_cut_layer(const nn::NetworkSpec& spec);

// Readout ~ U(-1/sqrt(D), 1/sqrt(D)) from `seed`. Throws on an invalid cut.
ProbeSpec build_probe(const nn::Network<float>& backbone, int cut_layer, std::uint64_t seed,
                      std::uint64_t backbone_fingerprint = 0);

// Cut-layer activations for every record, [n][feature_dim].
std::vector<float> extract_features(const nn::Network<float>& backbone, int cut_layer,
                                    const nn::LabeledData& data, int batch = 250);

// Features with labels, ready for readout training or field aggregation.
struct FeatureSet {
  std::vector<float> features;
  std::vector<int> labels;
  int dim = 0;

  int size() const { return static_cast<int>(labels.size()); }
  nn::LabeledData view() const { return {features, labels, {dim, 1, 1}}; }
};

FeatureSet make_feature_set(const nn::Network<float>& backbone, int cut_layer,
                            const nn::LabeledData& data);

struct ProbeTrainResult {
  double accuracy = 0.0;  // on the held-out features
  std::vector<nn::EpochLog> log;
};

// Trains only the readout on precomputed backbone features; the backbone is
// never touched. With config.epochs == 0 the readout is left unchanged.
ProbeTrainResult train_probe(ProbeSpec& probe, const FeatureSet& train,
                             const FeatureSet& heldout, const nn::TrainConfig& config,
                             bool verbose = false);

// Raw readout fields (no softmax), [n][labels].
std::vector<float> probe_fields(const ProbeSpec& probe, std::span<const float> features, int n);

// Accuracy of argmax(probe_fields) against labels.
double probe_accuracy(const ProbeSpec& probe, const FeatureSet& data);

// The probe as a one-layer network over (feature_dim, 1, 1) inputs.
nn::Network<float> as_network(const ProbeSpec& probe);

}  // namespace afcc::probe
