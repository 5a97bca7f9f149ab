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

// Command-line front end over the C API.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "afcc/afcc.h"

namespace {

int fail(afcc_status s) {
  std::fprintf(stderr, "afcc: %s: %s\n", afcc_status_name(s), afcc_last_error());
  return static_cast<int>(s);
}

void print_log(const char* message, void*) { std::fprintf(stderr, "%s\n", message); }

std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-cluster analysis and pruning of convolutional networks"};
  app.require_subcommand(1);

  std::string config;
  std::optional<long long> seed;
  std::optional<std::string> field_set, scheme;
  std::optional<double> threshold;
  std::optional<int> layer;
  std::vector<std::string> overrides;
  bool quiet = false;

  const char* stages[] = {"train", "probe", "analyze", "prune", "finetune", "report", "render"};
  const char* help[] = {"train the network (A-AFCC: under its masks)",
                        "fit linear readouts on intermediate layers",
                        "compute field matrices, clusters and layer statistics",
                        "build and install connection masks",
                        "retrain a pruned network with its masks held",
                        "write the per-layer table and cost CSVs",
                        "write PPM images of the clipped field matrices"};
  std::vector<CLI::App*> stage_cmds;
  for (int i = 0; i < 7; ++i) {
    auto* cmd = app.add_subcommand(stages[i], help[i]);
    cmd->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--field-set", field_set, "records aggregated into field matrices")
        ->check(CLI::IsMember({"train", "test"}));
    cmd->add_option("--scheme", scheme, "pruning scheme")
        ->check(CLI::IsMember({"afcc", "a-afcc", "r-afcc-filter", "r-afcc-weight", "fc-node"}));
    cmd->add_option("--threshold", threshold, "clipping threshold for conv layers");
    cmd->add_option("--layer", layer, "restrict to one cut layer");
    cmd->add_option("--set", overrides, "config override key=value (repeatable)");
    cmd->add_flag("--quiet", quiet, "suppress progress output");
    stage_cmds.push_back(cmd);
  }

  std::string out_dir;
  int train_records = 10000, test_records = 2000;
  long long data_seed = 20240601;
  auto* make = app.add_subcommand("make-dataset", "write the synthetic 10-label dataset");
  make->add_option("--out", out_dir, "output directory")->required();
  make->add_option("--train", train_records, "training records");
  make->add_option("--test", test_records, "test records");
  make->add_option("--seed", data_seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  if (make->parsed()) {
    const auto s = afcc_make_synthetic_dataset(out_dir.c_str(), train_records, test_records,
                                               static_cast<uint64_t>(data_seed));
    return s == AFCC_OK ? 0 : fail(s);
  }

  std::string stage;
  for (int i = 0; i < 7; ++i)
    if (stage_cmds[static_cast<std::size_t>(i)]->parsed()) stage = stages[i];

  afcc_experiment* exp = nullptr;
  afcc_status s = afcc_experiment_open(config.c_str(), &exp);
  if (s != AFCC_OK) return fail(s);
  auto set = [&](const std::string& key, const std::string& value) {
    if (s == AFCC_OK) s = afcc_experiment_set(exp, key.c_str(), value.c_str());
  };
  if (seed) set("seed", std::to_string(*seed));
  if (field_set) set("field_set", json_string(*field_set));
  if (scheme) set("prune.scheme", json_string(*scheme));
  if (threshold) set("thresholds.conv", std::to_string(*threshold));
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "afcc: --set expects key=value, got '%s'\n", o.c_str());
      afcc_experiment_close(exp);
      return AFCC_ERR_INVALID_ARGUMENT;
    }
    set(o.substr(0, eq), o.substr(eq + 1));
  }
  if (s == AFCC_OK && layer) s = afcc_experiment_set_layer(exp, *layer);
  if (s == AFCC_OK && !quiet) s = afcc_experiment_set_logger(exp, print_log, nullptr);
  if (s == AFCC_OK) s = afcc_experiment_run(exp, stage.c_str());
  const int rc = s == AFCC_OK ? 0 : fail(s);
  afcc_experiment_close(exp);
  return rc;
}
