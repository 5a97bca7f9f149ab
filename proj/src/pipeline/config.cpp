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

#include "pipeline/config.hpp"

#include "common/error.hpp"
#include "common/fs_util.hpp"
#include "nn/checkpoint.hpp"

namespace afcc::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

nn::NetworkSpec reference_architecture(int num_labels) {
  nn::NetworkSpec spec;
  spec.input = {3, 32, 32};
  spec.num_labels = num_labels;
  spec.layers = {nn::Conv2D{3, 16, 3, 3, 1, 1, true},  nn::ReLU{}, nn::MaxPool{2, 2},
                 nn::Conv2D{16, 32, 3, 3, 1, 1, true}, nn::ReLU{}, nn::MaxPool{2, 2},
                 nn::Conv2D{32, 32, 3, 3, 1, 1, true}, nn::ReLU{},
                 nn::Conv2D{32, 64, 3, 3, 1, 1, true}, nn::ReLU{}, nn::MaxPool{2, 2},
                 nn::Flatten{},                         nn::Dense{64 * 4 * 4, num_labels, false}};
  return spec;
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.architecture = reference_architecture();
  c.train.eta = 0.01;
  c.train.mu = 0.93;
  c.train.alpha = 1.5e-3;
  c.train.schedule = {{0, 0.65, 6}};
  c.train.batch_size = 100;
  c.train.epochs = 30;
  // Readout settings for probes; fine-tuning reuses them.
  c.probe.eta = 0.01;
  c.probe.mu = 0.975;
  c.probe.alpha = 1e-3;
  c.probe.schedule = {{0, 0.975, 1}};
  c.probe.batch_size = 100;
  c.probe.epochs = 30;
  c.finetune = c.probe;
  c.finetune.epochs = 5;
  return c;
}

void ExperimentConfig::validate() const {
  architecture.validate();
  require(conv_threshold > 0.0 && conv_threshold < 1.0, "thresholds.conv must lie in (0, 1)");
  require(fc_node_threshold > 0.0 && fc_node_threshold < 1.0,
          "thresholds.fc_node must lie in (0, 1)");
  require(probe_split > 0.0 && probe_split < 1.0, "probe.split must lie in (0, 1)");
  train.validate();
  probe.validate();
  finetune.validate();
  for (double r : random_rates) require(r >= 0.0 && r <= 1.0, "prune.rates must lie in [0, 1]");
}

namespace {

json train_to_json(const nn::TrainConfig& t) {
  json sched = json::array();
  for (const auto& p : t.schedule)
    sched.push_back({{"start_epoch", p.start_epoch}, {"q", p.q}, {"delta_t", p.delta_t}});
  return {{"eta", t.eta},           {"mu", t.mu},         {"alpha", t.alpha},
          {"schedule", sched},      {"batch_size", t.batch_size},
          {"epochs", t.epochs}};
}

void train_from_json(const json& j, nn::TrainConfig& t) {
  t.eta = j.value("eta", t.eta);
  t.mu = j.value("mu", t.mu);
  t.alpha = j.value("alpha", t.alpha);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.epochs = j.value("epochs", t.epochs);
  if (j.contains("schedule")) {
    t.schedule.clear();
    for (const auto& p : j["schedule"])
      t.schedule.push_back({p.value("start_epoch", 0), p.at("q").get<double>(),
                            p.at("delta_t").get<int>()});
  }
}

std::string field_set_name(FieldSet f) { return f == FieldSet::kTrain ? "train" : "test"; }

}  // namespace

json to_json(const ExperimentConfig& c) {
  json j;
  j["architecture"] = nn::spec_to_json(c.architecture);
  j["dataset"] = {{"path", c.dataset_path.string()},
                  {"format", data::to_string(c.dataset_format)},
                  {"label_bytes", c.load.label_bytes},
                  {"num_labels", c.load.num_labels},
                  {"train_limit", c.load.train_limit},
                  {"test_limit", c.load.test_limit}};
  j["augment"] = {{"horizontal_flip", c.augment.horizontal_flip},
                  {"max_translate", c.augment.max_translate}};
  j["field_set"] = field_set_name(c.field_set);
  j["thresholds"] = {{"conv", c.conv_threshold}, {"fc_node", c.fc_node_threshold}};
  j["train"] = train_to_json(c.train);
  j["probe"] = train_to_json(c.probe);
  j["probe"]["split"] = c.probe_split;
  j["probe"]["layers"] = c.probe_layers;
  j["prune"] = {{"scheme", pruning::to_string(c.scheme)},
                {"a_afcc", {{"base_size", c.artificial.base_size},
                            {"increment", c.artificial.increment}}},
                {"rates", c.random_rates},
                {"remove_noise_nodes", c.remove_noise_nodes}};
  j["finetune"] = train_to_json(c.finetune);
  j["seed"] = c.seed;
  j["output"] = c.output.string();
  return j;
}

ExperimentConfig config_from_json(const json& j, const fs::path& base) {
  ExperimentConfig c = default_config();
  try {
    if (j.contains("architecture")) {
      const auto& a = j["architecture"];
      if (a.is_string() && a.get<std::string>() == "reference")
        c.architecture = reference_architecture(j.value("num_labels", 10));
      else
        c.architecture = nn::spec_from_json(a);
    }
    if (j.contains("dataset")) {
      const auto& d = j["dataset"];
      if (d.contains("path")) {
        fs::path p = d["path"].get<std::string>();
        c.dataset_path = p.is_relative() && !base.empty() ? base / p : p;
      }
      if (d.contains("format")) c.dataset_format = data::format_from_string(d["format"].get<std::string>());
      c.load.label_bytes = d.value("label_bytes", c.load.label_bytes);
      c.load.num_labels = d.value("num_labels", c.load.num_labels);
      c.load.train_limit = d.value("train_limit", c.load.train_limit);
      c.load.test_limit = d.value("test_limit", c.load.test_limit);
    }
    if (j.contains("augment")) {
      c.augment.horizontal_flip = j["augment"].value("horizontal_flip", c.augment.horizontal_flip);
      c.augment.max_translate = j["augment"].value("max_translate", c.augment.max_translate);
    }
    if (j.contains("field_set")) {
      const auto f = j["field_set"].get<std::string>();
      if (f == "train") c.field_set = FieldSet::kTrain;
      else if (f == "test") c.field_set = FieldSet::kTest;
      else throw Error(ErrorCode::kInvalidArgument, "field_set must be train or test");
    }
    if (j.contains("thresholds")) {
      c.conv_threshold = j["thresholds"].value("conv", c.conv_threshold);
      c.fc_node_threshold = j["thresholds"].value("fc_node", c.fc_node_threshold);
    }
    if (j.contains("train")) train_from_json(j["train"], c.train);
    if (j.contains("probe")) {
      train_from_json(j["probe"], c.probe);
      c.probe_split = j["probe"].value("split", c.probe_split);
      if (j["probe"].contains("layers"))
        c.probe_layers = j["probe"]["layers"].get<std::vector<int>>();
    }
    // Fine-tuning inherits the probe settings unless configured.
    c.finetune = [&] {
      nn::TrainConfig ft = c.probe;
      ft.epochs = 5;
      if (j.contains("finetune")) train_from_json(j["finetune"], ft);
      return ft;
    }();
    if (j.contains("prune")) {
      const auto& p = j["prune"];
      if (p.contains("scheme")) c.scheme = pruning::scheme_from_string(p["scheme"].get<std::string>());
      if (p.contains("a_afcc")) {
        c.artificial.base_size = p["a_afcc"].value("base_size", c.artificial.base_size);
        c.artificial.increment = p["a_afcc"].value("increment", c.artificial.increment);
      }
      if (p.contains("rates")) c.random_rates = p["rates"].get<std::vector<double>>();
      c.remove_noise_nodes = p.value("remove_noise_nodes", c.remove_noise_nodes);
    }
    c.seed = j.value("seed", c.seed);
    c.train.seed = c.probe.seed = c.finetune.seed = c.seed;
    if (j.contains("output")) {
      fs::path o = j["output"].get<std::string>();
      c.output = o.is_relative() && !base.empty() ? base / o : o;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos && eq > 0, "override must look like key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    if (!node->contains(part) || !(*node)[part].is_object()) (*node)[part] = json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

}  // namespace afcc::pipeline
