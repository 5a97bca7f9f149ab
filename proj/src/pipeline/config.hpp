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
#include <filesystem>
#include <string>
#include <vector>

#include "data/dataset.hpp"
#include "json.hpp"
#include "nn/layer_spec.hpp"
#include "nn/optimizer.hpp"
#include "pruning/pruning.hpp"

namespace afcc::pipeline {

enum class FieldSet { kTrain, kTest };

struct ArtificialParams {
  int base_size = 0;  // 0: one above the top probed layer's measured diagonal
  int increment = 1;
};

// Every tunable of a run. Defaults are listed in README.md; the JSON config
// document uses the same (snake_case) keys as to_json() emits.
struct ExperimentConfig {
  nn::NetworkSpec architecture;
  std::filesystem::path dataset_path;
  data::Format dataset_format = data::Format::kCifarBinary;
  data::LoadOptions load;
  data::AugmentPolicy augment;
  FieldSet field_set = FieldSet::kTest;
  double conv_threshold = 0.3;
  double fc_node_threshold = 0.98;
  nn::TrainConfig train;
  nn::TrainConfig probe;
  double probe_split = 0.8;   // fraction of the training set used to fit probes
  std::vector<int> probe_layers;  // cut layers; empty = automatic
  pruning::Scheme scheme = pruning::Scheme::kAfcc;
  ArtificialParams artificial;
  std::vector<double> random_rates;  // explicit r-afcc rates per pruned pair; empty = matched
  bool remove_noise_nodes = true;
  nn::TrainConfig finetune;
  std::uint64_t seed = 1;
  std::filesystem::path output = "afcc-run";

  void validate() const;
};

ExperimentConfig default_config();

// Missing keys keep their defaults. Relative paths resolve against `base`.
ExperimentConfig config_from_json(const nlohmann::json& j,
                                  const std::filesystem::path& base = {});
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);

// Applies "a.b.c=value" overrides on the JSON form (value parsed as JSON,
// falling back to a string).
void apply_override(nlohmann::json& j, const std::string& assignment);

// The reference desk-scale network: conv 16/32/32/64 (3x3, pad 1) with ReLU,
// 2x2 max-pooling after conv 1, 2 and 4, and a bias-free readout.
nn::NetworkSpec reference_architecture(int num_labels = 10);

}  // namespace afcc::pipeline
