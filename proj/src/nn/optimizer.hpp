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
#include <vector>

#include "nn/network.hpp"

namespace afcc::nn {

// Learning rate is multiplied by `q` at every epoch k >= 1 with
// (k - start_epoch) % delta_t == 0, using the phase that contains k.
struct DecayPhase {
  int start_epoch = 0;
  double q = 1.0;
  int delta_t = 1;
};

struct TrainConfig {
  double eta = 5e-3;
  double mu = 0.93;
  double alpha = 1.5e-3;
  std::vector<DecayPhase> schedule{{0, 0.65, 20}};
  int batch_size = 100;
  int epochs = 1;
  std::uint64_t seed = 1;

  void validate() const;
};

// eta_0 times every decay factor applied up to and including `epoch`.
// Epochs past the last phase start keep following the last phase.
double lr_at(const TrainConfig& config, int epoch);

template <class T>
struct SgdState {
  std::vector<std::vector<T>> weight_velocity;
  std::vector<std::vector<T>> bias_velocity;
};

// Nesterov momentum with L2 folded into the gradient:
//   d = g + alpha * w
//   v = mu * v + d
//   w = w - eta * (d + mu * v)
// Layers without gradients (frozen) are left untouched. Masked entries are
// re-zeroed after the update and their velocity never accumulates.
template <class T>
void sgd_step(Network<T>& net, SgdState<T>& state, const Gradients<T>& grads,
              const TrainConfig& config, int epoch);

extern template void sgd_step<float>(Network<float>&, SgdState<float>&,
                                     const Gradients<float>&, const TrainConfig&, int);
extern template void sgd_step<double>(Network<double>&, SgdState<double>&,
                                      const Gradients<double>&, const TrainConfig&, int);

}  // namespace afcc::nn
