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

#include "probe/probe.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace afcc::probe {

int max_cut_layer(const nn::NetworkSpec& spec) {
  return static_cast<int>(spec.layers.size()) - 2;
}

ProbeSpec build_probe(const nn::Network<float>& backbone, int cut_layer, std::uint64_t seed,
                      std::uint64_t backbone_fingerprint) {
  const int hi = max_cut_layer(backbone.spec());
  if (cut_layer < 0 || cut_layer > hi)
    throw Error(ErrorCode::kInvalidArgument, "cut layer " + std::to_string(cut_layer) +
                                                 " outside [0, " + std::to_string(hi) + "]");
  ProbeSpec p;
  p.cut_layer = cut_layer;
  p.feature_shape = backbone.shapes().at(static_cast<std::size_t>(cut_layer));
  p.num_labels = backbone.spec().num_labels;
  p.backbone_fingerprint = backbone_fingerprint;
  p.readout.resize(static_cast<std::size_t>(p.num_labels) * p.feature_shape.size());
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(p.feature_shape.size()));
  for (auto& w : p.readout) w = static_cast<float>(rng.uniform(-bound, bound));
  return p;
}

std::vector<float> extract_features(const nn::Network<float>& backbone, int cut_layer,
                                    const nn::LabeledData& data, int batch) {
  const std::size_t sample = data.shape.size();
  const std::size_t dim = backbone.shapes().at(static_cast<std::size_t>(cut_layer)).size();
  std::vector<float> out(static_cast<std::size_t>(data.size()) * dim);
  for (int start = 0; start < data.size(); start += batch) {
    const int n = std::min(batch, data.size() - start);
    auto f = backbone.forward(data.images.subspan(static_cast<std::size_t>(start) * sample,
                                                  static_cast<std::size_t>(n) * sample),
                              n, nullptr, cut_layer);
    std::copy(f.begin(), f.end(), out.begin() + static_cast<std::ptrdiff_t>(start * dim));
  }
  return out;
}

FeatureSet make_feature_set(const nn::Network<float>& backbone, int cut_layer,
                            const nn::LabeledData& data) {
  FeatureSet fs;
  fs.dim = static_cast<int>(backbone.shapes().at(static_cast<std::size_t>(cut_layer)).size());
  fs.features = extract_features(backbone, cut_layer, data);
  fs.labels.assign(data.labels.begin(), data.labels.end());
  return fs;
}

nn::Network<float> as_network(const ProbeSpec& probe) {
  nn::NetworkSpec spec;
  spec.input = {probe.feature_dim(), 1, 1};
  spec.num_labels = probe.num_labels;
  spec.layers = {nn::Dense{probe.feature_dim(), probe.num_labels, false}};
  nn::Network<float> net(spec);
  net.params(0).weight = probe.readout;
  return net;
}

ProbeTrainResult train_probe(ProbeSpec& probe, const FeatureSet& train, const FeatureSet& heldout,
                             const nn::TrainConfig& config, bool verbose) {
  if (train.dim != probe.feature_dim() || heldout.dim != probe.feature_dim())
    throw ShapeError(probe.cut_layer, "feature dimension does not match the probe");
  ProbeTrainResult result;
  auto net = as_network(probe);
  if (config.epochs > 0) {
    nn::TrainOptions opt;
    opt.verbose = verbose;
    result.log = nn::train(net, train.view(), config, opt);
    probe.readout = net.params(0).weight;
  }
  result.accuracy = probe_accuracy(probe, heldout);
  return result;
}

std::vector<float> probe_fields(const ProbeSpec& probe, std::span<const float> features, int n) {
  if (features.size() != static_cast<std::size_t>(n) * probe.feature_shape.size())
    throw ShapeError(probe.cut_layer, "feature batch size mismatch");
  // Fixed-order double accumulation per row, so a row's fields do not
  // depend on how many rows share the call.
  std::vector<float> out(static_cast<std::size_t>(n) * probe.num_labels);
  const auto dim = static_cast<std::size_t>(probe.feature_dim());
  for (int s = 0; s < n; ++s) {
    const float* x = features.data() + static_cast<std::size_t>(s) * dim;
    for (int j = 0; j < probe.num_labels; ++j) {
      const float* w = probe.readout.data() + static_cast<std::size_t>(j) * dim;
      double acc = 0.0;
      for (std::size_t k = 0; k < dim; ++k) acc += static_cast<double>(w[k]) * x[k];
      out[static_cast<std::size_t>(s) * probe.num_labels + j] = static_cast<float>(acc);
    }
  }
  return out;
}

double probe_accuracy(const ProbeSpec& probe, const FeatureSet& data) {
  if (data.size() == 0) return 0.0;
  const auto fields = probe_fields(probe, data.features, data.size());
  long correct = 0;
  for (int s = 0; s < data.size(); ++s) {
    const float* row = fields.data() + static_cast<std::size_t>(s) * probe.num_labels;
    const int pred = static_cast<int>(std::max_element(row, row + probe.num_labels) - row);
    if (pred == data.labels[static_cast<std::size_t>(s)]) ++correct;
  }
  return static_cast<double>(correct) / data.size();
}

}  // namespace afcc::probe
