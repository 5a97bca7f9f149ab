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

#include "nn/optimizer.hpp"

#include "common/error.hpp"

namespace afcc::nn {

void TrainConfig::validate() const {
  require(eta > 0.0, "eta must be positive");
  require(mu >= 0.0 && mu < 1.0, "mu must lie in [0, 1)");
  require(alpha >= 0.0, "alpha must be non-negative");
  require(batch_size > 0, "batch size must be positive");
  require(epochs >= 0, "epochs must be non-negative");
  require(!schedule.empty(), "schedule needs at least one phase");
  require(schedule.front().start_epoch == 0, "first schedule phase must start at epoch 0");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto& ph = schedule[i];
    require(ph.q > 0.0 && ph.q <= 1.0, "decay factor q must lie in (0, 1]");
    require(ph.delta_t >= 1, "decay interval must be >= 1");
    if (i > 0)
      require(ph.start_epoch > schedule[i - 1].start_epoch,
              "schedule phases must be ordered and disjoint");
  }
}

double lr_at(const TrainConfig& config, int epoch) {
  require(epoch >= 0, "epoch must be non-negative");
  double eta = config.eta;
  std::size_t phase = 0;
  for (int k = 1; k <= epoch; ++k) {
    while (phase + 1 < config.schedule.size() && config.schedule[phase + 1].start_epoch <= k)
      ++phase;
    const auto& ph = config.schedule[phase];
    if ((k - ph.start_epoch) % ph.delta_t == 0) eta *= ph.q;
  }
  return eta;
}

namespace {

template <class T>
void update(std::vector<T>& w, std::vector<T>& v, const std::vector<T>& g,
            const std::vector<std::uint8_t>& mask, T eta, T mu, T alpha) {
  if (g.empty()) return;
  if (g.size() != w.size()) throw Error(ErrorCode::kShapeMismatch, "gradient shape mismatch");
  if (v.size() != w.size()) v.assign(w.size(), T{0});
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!mask.empty() && !mask[i]) {
      w[i] = T{0};
      v[i] = T{0};
      continue;
    }
    const T d = g[i] + alpha * w[i];
    v[i] = mu * v[i] + d;
    w[i] -= eta * (d + mu * v[i]);
  }
}

}  // namespace

template <class T>
void sgd_step(Network<T>& net, SgdState<T>& state, const Gradients<T>& grads,
              const TrainConfig& config, int epoch) {
  const auto layers = static_cast<std::size_t>(net.num_layers());
  if (grads.weight.size() != layers || grads.bias.size() != layers)
    throw Error(ErrorCode::kShapeMismatch, "gradient list does not match network");
  state.weight_velocity.resize(layers);
  state.bias_velocity.resize(layers);
  const T eta = static_cast<T>(lr_at(config, epoch));
  const T mu = static_cast<T>(config.mu);
  const T alpha = static_cast<T>(config.alpha);
  for (std::size_t i = 0; i < layers; ++i) {
    auto& p = net.params(static_cast<int>(i));
    update(p.weight, state.weight_velocity[i], grads.weight[i], p.weight_mask, eta, mu, alpha);
    update(p.bias, state.bias_velocity[i], grads.bias[i], p.bias_mask, eta, mu, alpha);
  }
}

template void sgd_step<float>(Network<float>&, SgdState<float>&, const Gradients<float>&,
                              const TrainConfig&, int);
template void sgd_step<double>(Network<double>&, SgdState<double>&, const Gradients<double>&,
                               const TrainConfig&, int);

}  // namespace afcc::nn
