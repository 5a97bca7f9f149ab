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

#include <functional>
#include <span>
#include <vector>

#include "common/rng.hpp"
#include "nn/network.hpp"
#include "nn/optimizer.hpp"

namespace afcc::nn {

// Normalized images (NCHW float) with their labels.
struct LabeledData {
  std::span<const float> images;
  std::span<const int> labels;
  Shape3 shape;

  int size() const { return static_cast<int>(labels.size()); }
};

// In-place batch augmentation; `n` samples of the data shape.
using Augment = std::function<void(std::span<float> batch, int n, Rng& rng)>;

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  double eval_accuracy = -1.0;  // -1 when no evaluation set was given
};

struct TrainOptions {
  LayerSet frozen;
  Augment augment;
  const LabeledData* eval = nullptr;
  int start_epoch = 0;  // offsets the learning-rate schedule
  bool verbose = false;
};

// Mini-batch SGD over `data` for config.epochs epochs. Batch order is a
// per-epoch shuffle derived from config.seed. Throws NumericError carrying
// the epoch if the loss goes non-finite.
std::vector<EpochLog> train(Network<float>& net, const LabeledData& data,
                            const TrainConfig& config, const TrainOptions& options = {});

std::vector<int> predict(const Network<float>& net, const LabeledData& data, int batch = 250);
double accuracy(const Network<float>& net, const LabeledData& data, int batch = 250);

}  // namespace afcc::nn
