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

#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "common/error.hpp"
#include "common/fs_util.hpp"
#include "data/synthetic.hpp"
#include "nn/checkpoint.hpp"
#include "pipeline/config.hpp"
#include "pipeline/experiment.hpp"
#include "pipeline/topology.hpp"

namespace afcc::pipeline {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an afcc::Error";
  return ErrorCode::kInternal;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) {
      const auto bytes = read_file(e.path());
      out[fs::relative(e.path(), dir).string()] = std::string(bytes.begin(), bytes.end());
    }
  return out;
}

// ---------------------------------------------------------------- config

TEST(Config, DefaultsValidate) {
  const auto c = default_config();
  EXPECT_NO_THROW(c.validate());
  EXPECT_DOUBLE_EQ(c.conv_threshold, 0.3);
  EXPECT_DOUBLE_EQ(c.fc_node_threshold, 0.98);
  EXPECT_EQ(c.finetune.epochs, 5);
  EXPECT_DOUBLE_EQ(c.finetune.mu, c.probe.mu);
  EXPECT_EQ(c.scheme, pruning::Scheme::kAfcc);
}

TEST(Config, JsonRoundTripAndRelativePaths) {
  const json j = {{"architecture", "reference"},
                  {"dataset", {{"path", "data"}}},
                  {"output", "out"},
                  {"seed", 42},
                  {"thresholds", {{"conv", 0.4}}},
                  {"probe", {{"mu", 0.9}, {"epochs", 3}}},
                  {"prune", {{"scheme", "r-afcc-weight"}, {"rates", {0.5, 0.25}}}}};
  const auto c = config_from_json(j, "/base");
  EXPECT_EQ(c.dataset_path, fs::path("/base/data"));
  EXPECT_EQ(c.output, fs::path("/base/out"));
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.train.seed, 42u);
  EXPECT_DOUBLE_EQ(c.conv_threshold, 0.4);
  EXPECT_DOUBLE_EQ(c.finetune.mu, 0.9);
  EXPECT_EQ(c.finetune.epochs, 5);
  EXPECT_EQ(c.scheme, pruning::Scheme::kRandomWeight);
  EXPECT_EQ(c.random_rates, (std::vector<double>{0.5, 0.25}));

  const auto again = config_from_json(to_json(c));
  EXPECT_EQ(to_json(again), to_json(c));
}

TEST(Config, Overrides) {
  json j = {{"seed", 1}};
  apply_override(j, "thresholds.conv=0.45");
  apply_override(j, "prune.scheme=fc-node");
  apply_override(j, "train.epochs=3");
  EXPECT_DOUBLE_EQ(j["thresholds"]["conv"].get<double>(), 0.45);
  EXPECT_EQ(j["prune"]["scheme"], "fc-node");
  EXPECT_EQ(j["train"]["epochs"], 3);
  EXPECT_THROW(apply_override(j, "novalue"), Error);
}

TEST(Config, InvalidValuesRejected) {
  EXPECT_EQ(code_of([] { config_from_json({{"thresholds", {{"conv", 1.5}}}}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { config_from_json({{"prune", {{"scheme", "magnitude"}}}}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { config_from_json({{"seed", "seven"}}); }), ErrorCode::kFormat);
  EXPECT_EQ(code_of([] { config_from_json({{"field_set", "val"}}); }), ErrorCode::kInvalidArgument);
}

// ---------------------------------------------------------------- topology

TEST(Topology, ReferenceNetTapsAndLinks) {
  const auto spec = reference_architecture();
  EXPECT_EQ(auto_probe_layers(spec), (std::vector<int>{5, 7, 10}));
  const auto taps = resolve_taps(spec, auto_probe_layers(spec));
  ASSERT_EQ(taps.size(), 3u);
  EXPECT_EQ(taps[0].owner, 3);
  EXPECT_EQ(taps[1].owner, 6);
  EXPECT_EQ(taps[2].owner, 8);
  EXPECT_EQ(taps[2].units, 64);
  const auto links = find_links(spec, taps);
  ASSERT_EQ(links.size(), 3u);
  EXPECT_EQ(links[0].layer, 6);
  EXPECT_EQ(links[1].layer, 8);
  EXPECT_EQ(links[2].layer, 12);
  EXPECT_EQ(links[2].next, -1);
}

TEST(Topology, DenseHiddenLayersAreTapped) {
  nn::NetworkSpec spec;
  spec.input = {1, 4, 4};
  spec.num_labels = 3;
  spec.layers = {nn::Flatten{}, nn::Dense{16, 8, true}, nn::ReLU{}, nn::Dense{8, 6, true}, nn::ReLU{},
                 nn::Dense{6, 3, false}};
  const auto cuts = auto_probe_layers(spec);
  EXPECT_EQ(cuts, (std::vector<int>{2, 4}));
  const auto taps = resolve_taps(spec, cuts);
  EXPECT_TRUE(taps[0].dense);
  const auto links = find_links(spec, taps);
  ASSERT_EQ(links.size(), 2u);
  EXPECT_EQ(links[0].layer, 3);
  EXPECT_EQ(links[1].layer, 5);
}

TEST(Topology, BadCutsRejected) {
  const auto spec = reference_architecture();
  EXPECT_EQ(code_of([&] { resolve_taps(spec, {12}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { resolve_taps(spec, {-1}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { resolve_taps(spec, {11}); }), ErrorCode::kInvalidArgument);
}

// ---------------------------------------------------------------- end to end

class PipelineRun : public ::testing::Test {
 protected:
  static fs::path root_;

  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("afcc_pipeline_test_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    data::SyntheticOptions opt;
    opt.train = 400;
    opt.test = 200;
    opt.seed = 5;
    const auto [train, test] = data::make_synthetic(opt);
    write_file_atomic(root_ / "data" / "data_batch_1.bin", data::encode_cifar(train, 1));
    write_file_atomic(root_ / "data" / "test_batch.bin", data::encode_cifar(test, 1));
    auto e = experiment("run");
    for (auto s : {Stage::kTrain, Stage::kProbe, Stage::kAnalyze}) e.run(s);
  }

  static void TearDownTestSuite() { fs::remove_all(root_); }

  static json config_json(const std::string& out) {
    const json small = {{"epochs", 1}, {"batch_size", 50}};
    return {{"architecture", "reference"},
            {"dataset", {{"path", (root_ / "data").string()}}},
            {"train", small},
            {"probe", small},
            {"finetune", small},
            {"seed", 3},
            {"output", (root_ / out).string()}};
  }

  static Experiment experiment(const std::string& out, const std::string& scheme = "afcc",
                               json extra = json::object()) {
    json j = config_json(out);
    j["prune"] = {{"scheme", scheme}};
    j.merge_patch(extra);
    return Experiment(config_from_json(j));
  }
};

fs::path PipelineRun::root_;

TEST_F(PipelineRun, MissingPrerequisitesAreReported) {
  auto e = experiment("fresh");
  EXPECT_EQ(code_of([&] { e.run(Stage::kProbe); }), ErrorCode::kPrerequisite);
  EXPECT_EQ(code_of([&] { e.run(Stage::kAnalyze); }), ErrorCode::kPrerequisite);
  EXPECT_EQ(code_of([&] { e.run(Stage::kPrune); }), ErrorCode::kPrerequisite);
  EXPECT_EQ(code_of([&] { e.run(Stage::kFinetune); }), ErrorCode::kPrerequisite);
  EXPECT_EQ(code_of([&] { e.run(Stage::kReport); }), ErrorCode::kPrerequisite);
  try {
    e.run(Stage::kProbe);
  } catch (const Error& err) {
    EXPECT_NE(std::string(err.what()).find("afcc train"), std::string::npos) << err.what();
  }
}

TEST_F(PipelineRun, StagesWriteManifests) {
  for (const char* stage : {"train", "probe", "analyze"}) {
    const auto m = json::parse(read_text(root_ / "run" / stage / "manifest.json"));
    EXPECT_EQ(m["stage"], stage);
    EXPECT_EQ(m["seed"], 3);
    EXPECT_TRUE(m.contains("config"));
    EXPECT_FALSE(m["artifacts"].empty());
  }
  auto e = experiment("run");
  EXPECT_EQ(e.cut_layers(), (std::vector<int>{5, 7, 10}));
  for (int cut : {5, 7, 10}) {
    EXPECT_TRUE(fs::exists(root_ / "run" / "probe" / ("layer_" + std::to_string(cut) + ".json")));
    EXPECT_TRUE(fs::exists(root_ / "run" / "analyze" / ("layer_" + std::to_string(cut) + "_fields.csv")));
  }
}

TEST_F(PipelineRun, RerunningStagesIsByteIdentical) {
  const auto dir = root_ / "twice";
  fs::remove_all(dir);
  auto e = experiment("twice");
  const Stage stages[] = {Stage::kTrain, Stage::kProbe, Stage::kAnalyze, Stage::kPrune, Stage::kFinetune,
                          Stage::kReport};
  for (auto s : stages) e.run(s);
  const auto first = snapshot(dir);
  auto again = experiment("twice");
  for (auto s : stages) again.run(s);
  const auto second = snapshot(dir);
  ASSERT_EQ(first.size(), second.size());
  for (const auto& [name, bytes] : first) EXPECT_TRUE(second.at(name) == bytes) << name;
}

TEST_F(PipelineRun, UnprunedReportHasFullSurvival) {
  auto e = experiment("run", "r-afcc-weight");
  e.run(Stage::kReport);
  const auto table = read_text(root_ / "run" / "report" / "table_r-afcc-weight.csv");
  EXPECT_EQ(table.substr(0, table.find('\n')),
            "layer,accuracy,N_c,C_s,diagonal,noise,dilution_est,dilution_measured,params_masked,macs_masked");
  const auto cost = read_text(root_ / "run" / "report" / "cost_r-afcc-weight.csv");
  std::istringstream in(cost);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "layer,params_dense,params_masked,macs_dense,macs_masked,survival");
  int rows = 0;
  while (std::getline(in, line) && line.rfind("total", 0) != 0) {
    EXPECT_EQ(line.substr(line.rfind(',') + 1), "1") << line;
    ++rows;
  }
  EXPECT_EQ(rows, 5);
  const auto s = e.summary(Stage::kReport)["r-afcc-weight"];
  EXPECT_EQ(s["model"], "train");
  EXPECT_DOUBLE_EQ(s["macs_masked"].get<double>(), s["macs_dense"].get<double>());
}

TEST_F(PipelineRun, AfccMasksFollowProfilesAndSurviveFinetuning) {
  auto e = experiment("run");
  e.run(Stage::kPrune);
  const auto pruned = nn::load_checkpoint(root_ / "run" / "prune" / "afcc" / "model");
  ASSERT_EQ(pruned.masks.size(), 3u);
  const auto top = json::parse(read_text(root_ / "run" / "analyze" / "layer_10.json"));
  double unions = 0.0;
  for (const auto& f : top["filters"]) unions += static_cast<double>(f["union"].size());
  const auto& out = pruned.masks.back();
  EXPECT_EQ(out.layer, 12);
  EXPECT_NEAR(out.rate, 1.0 - unions / (64.0 * 10.0), 1e-12);

  e.run(Stage::kFinetune);
  const auto tuned = nn::load_checkpoint(root_ / "run" / "finetune" / "afcc" / "model");
  ASSERT_EQ(tuned.masks.size(), pruned.masks.size());
  for (std::size_t k = 0; k < tuned.masks.size(); ++k) EXPECT_EQ(tuned.masks[k].mask, pruned.masks[k].mask);
  for (int li = 0; li < tuned.net.num_layers(); ++li) {
    const auto& p = tuned.net.params(li);
    for (std::size_t i = 0; i < p.weight_mask.size(); ++i)
      if (!p.weight_mask[i]) {
        ASSERT_EQ(p.weight[i], 0.0f) << "layer " << li;
      }
  }
  EXPECT_GE(e.metric(Stage::kFinetune, "/accuracy"), 0.0);
}

TEST_F(PipelineRun, RandomSchemeMatchesOrUsesConfiguredRates) {
  auto e = experiment("run", "r-afcc-filter", {{"prune", {{"rates", {0.25, 0.5, 0.75}}}}});
  e.run(Stage::kPrune);
  const auto s = e.summary(Stage::kPrune);
  ASSERT_EQ(s["links"].size(), 3u);
  const double targets[] = {0.25, 0.5, 0.75};
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_DOUBLE_EQ(s["links"][k]["target_rate"].get<double>(), targets[k]);
    EXPECT_NEAR(s["links"][k]["rate"].get<double>(), targets[k], 0.1);
  }
}

TEST_F(PipelineRun, ArtificialSchemeTrainsFromScratch) {
  auto e = experiment("run", "a-afcc", {{"prune", {{"a_afcc", {{"base_size", 3}}}}}});
  EXPECT_EQ(code_of([&] { e.run(Stage::kFinetune); }), ErrorCode::kInvalidArgument);
  e.run(Stage::kPrune);
  const auto s = e.summary(Stage::kPrune);
  EXPECT_EQ(s["base_size"], 3);
  EXPECT_EQ(s["layers"][2]["cluster_size"], 3);
  EXPECT_EQ(s["layers"][0]["cluster_size"], 5);
  for (const auto& l : s["layers"]) EXPECT_LE(l["coverage_spread"].get<int>(), 1);
  e.run(Stage::kTrain);
  const auto trained = nn::load_checkpoint(root_ / "run" / "train" / "a-afcc" / "model");
  EXPECT_EQ(trained.masks.size(), 3u);
  e.run(Stage::kReport);
  EXPECT_EQ(e.summary(Stage::kReport)["a-afcc"]["model"], "train");
  EXPECT_LT(e.summary(Stage::kReport)["a-afcc"]["macs_masked"].get<double>(),
            e.summary(Stage::kReport)["a-afcc"]["macs_dense"].get<double>());
}

TEST_F(PipelineRun, ArtificialMaskWithoutSignalPathIsFatal) {
  // One filter per layer and single-label blocks: two layers whose labels
  // differ leave no path.
  const json arch = {{"input", {3, 8, 8}},
                     {"num_labels", 10},
                     {"layers",
                      {{{"type", "conv"}, {"in", 3}, {"out", 1}, {"kernel", 3}, {"pad", 1}},
                       {{"type", "relu"}},
                       {{"type", "conv"}, {"in", 1}, {"out", 1}, {"kernel", 3}, {"pad", 1}},
                       {{"type", "relu"}},
                       {{"type", "flatten"}},
                       {{"type", "dense"}, {"in", 64}, {"out", 10}, {"bias", false}}}}};
  int fatal = 0, ok = 0;
  for (int seed = 1; seed <= 40; ++seed) {
    json j = config_json("nosignal");
    j["architecture"] = arch;
    j["seed"] = seed;
    j["dataset"]["train_limit"] = 10;
    j["prune"] = {{"scheme", "a-afcc"}, {"a_afcc", {{"base_size", 1}, {"increment", 0}}}};
    Experiment e(config_from_json(j));
    try {
      e.run(Stage::kPrune);
      ++ok;
    } catch (const Error& err) {
      EXPECT_EQ(err.code(), ErrorCode::kPrerequisite) << err.what();
      ++fatal;
    }
  }
  EXPECT_GT(fatal, 0);
  EXPECT_GT(ok, 0);
}

TEST_F(PipelineRun, RenderWritesPixmaps) {
  auto e = experiment("run");
  e.set_layer(10);
  e.run(Stage::kRender);
  const auto ppm = read_file(root_ / "run" / "render" / "layer_10" / "filter_0.ppm");
  ASSERT_GT(ppm.size(), 2u);
  EXPECT_EQ(ppm[0], 'P');
  EXPECT_EQ(ppm[1], '6');
  EXPECT_FALSE(fs::exists(root_ / "run" / "render" / "layer_5"));
}

TEST_F(PipelineRun, StageNamesRoundTrip) {
  for (auto s : {Stage::kTrain, Stage::kProbe, Stage::kAnalyze, Stage::kPrune, Stage::kFinetune, Stage::kReport,
                 Stage::kRender})
    EXPECT_EQ(stage_from_string(to_string(s)), s);
  EXPECT_EQ(code_of([] { stage_from_string("deploy"); }), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace afcc::pipeline
