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

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "data/dataset.hpp"
#include "json.hpp"
#include "pipeline/config.hpp"

namespace afcc::pipeline {

enum class Stage { kTrain, kProbe, kAnalyze, kPrune, kFinetune, kReport, kRender };

std::string to_string(Stage s);
Stage stage_from_string(const std::string& s);

// Runs pipeline stages against one output directory. Each stage reads the
// artifacts of earlier stages from disk, so stages may run in separate
// processes. Layout under config.output:
//   train/                  baseline model + summary
//   train/a-afcc/           A-AFCC model trained under its masks
//   probe/layer_<m>.*       one readout checkpoint per cut layer
//   analyze/layer_<m>.*     cluster profiles, layer stats, field matrices
//   prune/<scheme>/         masked model (A-AFCC: untrained) + summary
//   finetune/<scheme>/      fine-tuned masked model + summary
//   report/                 table_<scheme>.csv, cost_<scheme>.csv
//   render/layer_<m>/       filter_<f>.ppm
// Every stage directory carries a manifest.json listing its artifacts.
class Experiment {
 public:
  using Logger = std::function<void(const std::string&)>;

  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  void set_logger(Logger logger) { logger_ = std::move(logger); }
  // Restricts probe/analyze/render to one cut layer.
  void set_layer(std::optional<int> layer) { layer_ = layer; }

  void run(Stage stage);

  // summary.json of a stage; `scheme` is ignored for stages without variants.
  nlohmann::json summary(Stage stage) const;
  // Numeric field at a JSON pointer (e.g. "/accuracy") in summary(stage).
  double metric(Stage stage, const std::string& pointer) const;

  std::filesystem::path stage_dir(Stage stage) const;
  std::vector<int> cut_layers() const;

  // Loads (once) the configured dataset.
  const data::DatasetSplit& train_split();
  const data::DatasetSplit& test_split();

 private:
  void run_train();
  void run_probe();
  void run_analyze();
  void run_prune();
  void run_finetune();
  void run_report();
  void run_render();

  void log(const std::string& msg) const;
  void load_data();
  void write_manifest(Stage stage, const nlohmann::json& artifacts) const;

  ExperimentConfig config_;
  Logger logger_;
  std::optional<int> layer_;
  std::optional<data::DatasetSplit> train_;
  std::optional<data::DatasetSplit> test_;
};

}  // namespace afcc::pipeline
