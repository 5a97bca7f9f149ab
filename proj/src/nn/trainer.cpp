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

#include "nn/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "common/error.hpp"

namespace afcc::nn {

std::vector<EpochLog> train(Network<float>& net, const LabeledData& data,
                            const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  if (data.size() == 0) throw Error(ErrorCode::kInvalidArgument, "training set is empty");
  if (data.shape != net.spec().input)
    throw ShapeError(0, "dataset shape does not match network input");
  for (int f : options.frozen)
    if (f < 0 || f >= net.num_layers())
      throw Error(ErrorCode::kInvalidArgument, "frozen layer " + std::to_string(f) + " out of range");

  const std::size_t sample = data.shape.size();
  const int nl = net.spec().num_labels;
  SgdState<float> state;
  std::vector<int> order(static_cast<std::size_t>(data.size()));
  std::vector<float> batch;
  std::vector<int> labels;
  std::vector<EpochLog> log;
  ForwardCache<float> cache;

  for (int e = 0; e < config.epochs; ++e) {
    const int epoch = options.start_epoch + e;
    Rng rng(Rng::mix(config.seed, static_cast<std::uint64_t>(epoch)));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());

    double loss_sum = 0.0;
    long correct = 0;
    for (int start = 0; start < data.size(); start += config.batch_size) {
      const int n = std::min(config.batch_size, data.size() - start);
      batch.resize(static_cast<std::size_t>(n) * sample);
      labels.resize(static_cast<std::size_t>(n));
      for (int s = 0; s < n; ++s) {
        const auto idx = static_cast<std::size_t>(order[static_cast<std::size_t>(start + s)]);
        std::copy_n(data.images.begin() + static_cast<std::ptrdiff_t>(idx * sample), sample,
                    batch.begin() + static_cast<std::ptrdiff_t>(s) * static_cast<std::ptrdiff_t>(sample));
        labels[static_cast<std::size_t>(s)] = data.labels[idx];
      }
      if (options.augment) options.augment(batch, n, rng);

      net.forward(batch, n, &cache);
      Gradients<float> g;
      try {
        g = net.backward(cache, labels, options.frozen);
      } catch (const NumericError& err) {
        throw NumericError(epoch, "training diverged at epoch " + std::to_string(epoch) +
                                      ": " + err.what());
      }
      loss_sum += g.loss * n;
      const auto& logits = cache.acts.back();
      for (int s = 0; s < n; ++s) {
        std::span<const float> row(logits.data() + static_cast<std::size_t>(s) * nl,
                                   static_cast<std::size_t>(nl));
        if (argmax_row(row) == labels[static_cast<std::size_t>(s)]) ++correct;
      }
      sgd_step(net, state, g, config, epoch);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = lr_at(config, epoch);
    entry.loss = loss_sum / data.size();
    entry.train_accuracy = static_cast<double>(correct) / data.size();
    if (options.eval != nullptr) entry.eval_accuracy = accuracy(net, *options.eval);
    if (options.verbose)
      std::fprintf(stderr, "epoch %3d  lr %.5f  loss %.4f  train %.4f  eval %.4f\n", epoch,
                   entry.lr, entry.loss, entry.train_accuracy, entry.eval_accuracy);
    log.push_back(entry);
  }
  return log;
}

std::vector<int> predict(const Network<float>& net, const LabeledData& data, int batch) {
  const std::size_t sample = data.shape.size();
  const int nl = net.spec().num_labels;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(data.size()));
  for (int start = 0; start < data.size(); start += batch) {
    const int n = std::min(batch, data.size() - start);
    auto logits = net.forward(
        data.images.subspan(static_cast<std::size_t>(start) * sample,
                            static_cast<std::size_t>(n) * sample),
        n);
    for (int s = 0; s < n; ++s)
      out.push_back(argmax_row(std::span<const float>(
          logits.data() + static_cast<std::size_t>(s) * nl, static_cast<std::size_t>(nl))));
  }
  return out;
}

double accuracy(const Network<float>& net, const LabeledData& data, int batch) {
  if (data.size() == 0) return 0.0;
  const auto pred = predict(net, data, batch);
  long correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == data.labels[i]) ++correct;
  return static_cast<double>(correct) / data.size();
}

}  // namespace afcc::nn
