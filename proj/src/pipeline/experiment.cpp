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

#include "pipeline/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "accounting/cost.hpp"
#include "common/error.hpp"
#include "common/fs_util.hpp"
#include "common/rng.hpp"
#include "metrics/filter_metrics.hpp"
#include "nn/checkpoint.hpp"
#include "nn/trainer.hpp"
#include "pipeline/topology.hpp"
#include "probe/probe.hpp"
#include "pruning/pruning.hpp"

namespace afcc::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using pruning::Scheme;

namespace {

constexpr int kFormatVersion = 1;

// Seed salts; every random stream of a run derives from config.seed.
constexpr std::uint64_t kInitSalt = 0x1001;
constexpr std::uint64_t kTrainSalt = 0x1002;
constexpr std::uint64_t kSplitSalt = 0x1003;
constexpr std::uint64_t kProbeInitSalt = 0x2000;
constexpr std::uint64_t kProbeTrainSalt = 0x3000;
constexpr std::uint64_t kRandomMaskSalt = 0x4000;
constexpr std::uint64_t kAssignSalt = 0x5001;
constexpr std::uint64_t kFinetuneSalt = 0x5002;

json read_json(const fs::path& p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::exception& e) {
    throw FormatError(0, p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const json& j) { write_text_atomic(p, j.dump(2) + "\n"); }

[[noreturn]] void missing(const std::string& what, const std::string& hint) {
  throw Error(ErrorCode::kPrerequisite, "missing " + what + "; run '" + hint + "' first");
}

std::string layer_stem(int cut) { return "layer_" + std::to_string(cut); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json log_to_json(const std::vector<nn::EpochLog>& log) {
  json a = json::array();
  for (const auto& e : log)
    a.push_back({{"epoch", e.epoch},
                 {"lr", e.lr},
                 {"loss", e.loss},
                 {"train_accuracy", e.train_accuracy},
                 {"eval_accuracy", e.eval_accuracy}});
  return a;
}

json stats_to_json(const metrics::LayerStats& s) {
  return {{"filters", s.filters}, {"n_c", s.n_c}, {"c_s", s.c_s},
          {"diagonal", s.diagonal}, {"noise", s.noise}};
}

json profile_to_json(const metrics::FilterProfile& p) {
  json clusters = json::array();
  for (const auto& c : p.clusters) clusters.push_back(c.labels);
  return {{"id", p.filter_id},
          {"dead", p.dead()},
          {"clusters", clusters},
          {"noise", p.noise_count},
          {"union", p.label_union}};
}

metrics::FilterProfile profile_from_json(const json& j) {
  metrics::FilterProfile p;
  p.filter_id = j.at("id").get<int>();
  for (const auto& c : j.at("clusters")) p.clusters.push_back({c.get<std::vector<int>>()});
  p.noise_count = j.at("noise").get<int>();
  p.label_union = j.at("union").get<std::vector<int>>();
  return p;
}

nn::Checkpoint probe_checkpoint(const probe::ProbeSpec& p, double acc, std::uint64_t seed) {
  nn::Checkpoint c;
  c.net = probe::as_network(p);
  c.seed = seed;
  c.meta = {{"probe", true},
            {"cut_layer", p.cut_layer},
            {"feature_shape",
             {p.feature_shape.channels, p.feature_shape.height, p.feature_shape.width}},
            {"backbone_fingerprint", p.backbone_fingerprint},
            {"accuracy", acc}};
  return c;
}

probe::ProbeSpec probe_from_checkpoint(const nn::Checkpoint& c) {
  if (!c.meta.value("probe", false)) throw Error(ErrorCode::kFormat, "checkpoint is not a probe");
  probe::ProbeSpec p;
  p.cut_layer = c.meta.at("cut_layer").get<int>();
  const auto& s = c.meta.at("feature_shape");
  p.feature_shape = {s[0].get<int>(), s[1].get<int>(), s[2].get<int>()};
  p.num_labels = c.net.spec().num_labels;
  p.readout = c.net.params(0).weight;
  p.backbone_fingerprint = c.meta.at("backbone_fingerprint").get<std::uint64_t>();
  return p;
}

// Everything the analyze stage stored for one cut layer.
struct LayerAnalysis {
  json doc;
  std::vector<metrics::FilterProfile> profiles;
  double diagonal = 0.0;
};

}  // namespace

std::string to_string(Stage s) {
  switch (s) {
    case Stage::kTrain: return "train";
    case Stage::kProbe: return "probe";
    case Stage::kAnalyze: return "analyze";
    case Stage::kPrune: return "prune";
    case Stage::kFinetune: return "finetune";
    case Stage::kReport: return "report";
    case Stage::kRender: return "render";
  }
  return "?";
}

Stage stage_from_string(const std::string& s) {
  for (Stage st : {Stage::kTrain, Stage::kProbe, Stage::kAnalyze, Stage::kPrune,
                   Stage::kFinetune, Stage::kReport, Stage::kRender})
    if (to_string(st) == s) return st;
  throw Error(ErrorCode::kInvalidArgument, "unknown stage '" + s + "'");
}

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  config_.validate();
}

void Experiment::log(const std::string& msg) const {
  if (logger_) logger_(msg);
}

fs::path Experiment::stage_dir(Stage stage) const {
  const fs::path root = config_.output;
  const std::string scheme = pruning::to_string(config_.scheme);
  switch (stage) {
    case Stage::kTrain:
      return config_.scheme == Scheme::kArtificialAfcc ? root / "train" / scheme : root / "train";
    case Stage::kPrune:
    case Stage::kFinetune:
      return root / to_string(stage) / scheme;
    default:
      return root / to_string(stage);
  }
}

std::vector<int> Experiment::cut_layers() const {
  if (layer_) {
    resolve_taps(config_.architecture, {*layer_});
    return {*layer_};
  }
  return config_.probe_layers.empty() ? auto_probe_layers(config_.architecture)
                                      : config_.probe_layers;
}

void Experiment::load_data() {
  if (train_) return;
  if (config_.dataset_path.empty())
    throw Error(ErrorCode::kInvalidArgument, "dataset.path is not set");
  auto [train, test] = data::load_dataset(config_.dataset_path, config_.dataset_format, config_.load);
  const auto& spec = config_.architecture;
  if (!(train.shape == spec.input))
    throw ShapeError(0, "dataset records do not match the network input shape");
  if (train.num_labels > spec.num_labels)
    throw Error(ErrorCode::kInvalidArgument, "dataset has more labels than the network outputs");
  train.num_labels = test.num_labels = spec.num_labels;
  train_ = std::move(train);
  test_ = std::move(test);
  log("data: " + std::to_string(train_->size()) + " train / " + std::to_string(test_->size()) +
      " test records");
}

const data::DatasetSplit& Experiment::train_split() {
  load_data();
  return *train_;
}

const data::DatasetSplit& Experiment::test_split() {
  load_data();
  return *test_;
}

void Experiment::write_manifest(Stage stage, const json& artifacts) const {
  const fs::path dir = stage_dir(stage);
  json hashes = json::object();
  for (const auto& name : artifacts) {
    const auto bytes = read_file(dir / name.get<std::string>());
    hashes[name.get<std::string>()] = hex64(fnv1a(bytes));
  }
  json m = {{"format", "afcc-stage"},
            {"version", kFormatVersion},
            {"stage", to_string(stage)},
            {"scheme", pruning::to_string(config_.scheme)},
            {"seed", config_.seed},
            {"config", to_json(config_)},
            {"artifacts", hashes}};
  write_json(dir / "manifest.json", m);
}

json Experiment::summary(Stage stage) const {
  const fs::path p = stage_dir(stage) / "summary.json";
  if (!fs::exists(p)) missing(to_string(stage) + " results", "afcc " + to_string(stage));
  return read_json(p);
}

double Experiment::metric(Stage stage, const std::string& pointer) const {
  const json s = summary(stage);
  const json::json_pointer ptr(pointer);
  if (!s.contains(ptr) || !s.at(ptr).is_number())
    throw Error(ErrorCode::kInvalidArgument,
                "no numeric metric " + pointer + " in " + to_string(stage) + " summary");
  return s.at(ptr).get<double>();
}

void Experiment::run(Stage stage) {
  try {
    fs::create_directories(stage_dir(stage));
    switch (stage) {
      case Stage::kTrain: run_train(); break;
      case Stage::kProbe: run_probe(); break;
      case Stage::kAnalyze: run_analyze(); break;
      case Stage::kPrune: run_prune(); break;
      case Stage::kFinetune: run_finetune(); break;
      case Stage::kReport: run_report(); break;
      case Stage::kRender: run_render(); break;
    }
  } catch (const Error& e) {
    throw Error(e.code(), "stage '" + to_string(stage) + "': " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::kIo, "stage '" + to_string(stage) + "': " + e.what());
  }
}

// ---------------------------------------------------------------- train

void Experiment::run_train() {
  load_data();
  const bool artificial = config_.scheme == Scheme::kArtificialAfcc;
  nn::Checkpoint ckpt;
  if (artificial) {
    const fs::path init = config_.output / "prune" / "a-afcc" / "model";
    if (!nn::checkpoint_exists(init)) missing("A-AFCC masks", "afcc prune --scheme a-afcc");
    ckpt = nn::load_checkpoint(init);
  } else {
    ckpt.net = nn::Network<float>(config_.architecture);
    ckpt.net.initialize(Rng::mix(config_.seed, kInitSalt));
  }
  nn::TrainConfig tc = config_.train;
  tc.seed = Rng::mix(config_.seed, kTrainSalt);
  const auto test_view = test_->view();
  nn::TrainOptions opt;
  opt.augment = data::make_augmenter(train_->shape, config_.augment);
  opt.eval = &test_view;
  opt.verbose = static_cast<bool>(logger_);
  log("train: " + std::to_string(tc.epochs) + " epochs" + (artificial ? " under A-AFCC masks" : ""));
  const auto history = nn::train(ckpt.net, train_->view(), tc, opt);
  const double acc = nn::accuracy(ckpt.net, test_view);
  ckpt.epoch += tc.epochs;
  ckpt.seed = config_.seed;
  ckpt.meta = {{"stage", "train"}, {"accuracy", acc}};
  const fs::path dir = stage_dir(Stage::kTrain);
  nn::save_checkpoint(dir / "model", ckpt);
  write_json(dir / "summary.json", {{"accuracy", acc},
                                    {"epochs", ckpt.epoch},
                                    {"fingerprint", ckpt.fingerprint()},
                                    {"log", log_to_json(history)}});
  log("train: test accuracy " + fmt(acc));
  json artifacts = {"model.json", "model.bin", "summary.json"};
  if (!ckpt.masks.empty()) artifacts.push_back("model.masks.bin");
  write_manifest(Stage::kTrain, artifacts);
}

// ---------------------------------------------------------------- probe

void Experiment::run_probe() {
  const fs::path backbone_path = config_.output / "train" / "model";
  if (!nn::checkpoint_exists(backbone_path)) missing("trained model", "afcc train");
  load_data();
  const nn::Checkpoint backbone = nn::load_checkpoint(backbone_path);
  const std::uint64_t fp = backbone.fingerprint();

  // Fixed fit / held-out split of the training set.
  std::vector<int> order(static_cast<std::size_t>(train_->size()));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Rng::mix(config_.seed, kSplitSalt));
  rng.shuffle(order.begin(), order.end());
  const auto n_fit = static_cast<std::size_t>(std::lround(config_.probe_split * train_->size()));
  const std::vector<int> fit_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_fit));
  const std::vector<int> held_idx(order.begin() + static_cast<std::ptrdiff_t>(n_fit), order.end());
  const auto fit = train_->select(fit_idx);
  const auto held = train_->select(held_idx);

  const fs::path dir = stage_dir(Stage::kProbe);
  json summ = fs::exists(dir / "summary.json") ? read_json(dir / "summary.json") : json::object();
  if (summ.value("backbone_fingerprint", std::uint64_t{0}) != fp) summ = json::object();
  summ["backbone_fingerprint"] = fp;
  json artifacts = {"summary.json"};
  for (int cut : cut_layers()) {
    const auto fit_fs = probe::make_feature_set(backbone.net, cut, fit.view());
    const auto held_fs = probe::make_feature_set(backbone.net, cut, held.view());
    auto p = probe::build_probe(backbone.net, cut,
                                Rng::mix(config_.seed, kProbeInitSalt + static_cast<std::uint64_t>(cut)), fp);
    nn::TrainConfig pc = config_.probe;
    pc.seed = Rng::mix(config_.seed, kProbeTrainSalt + static_cast<std::uint64_t>(cut));
    const auto result = probe::train_probe(p, fit_fs, held_fs, pc);
    nn::save_checkpoint(dir / layer_stem(cut), probe_checkpoint(p, result.accuracy, config_.seed));
    summ["layers"][std::to_string(cut)] = {{"accuracy", result.accuracy},
                                           {"units", p.num_units()},
                                           {"feature_dim", p.feature_dim()},
                                           {"log", log_to_json(result.log)}};
    log("probe: layer " + std::to_string(cut) + " held-out accuracy " + fmt(result.accuracy));
  }
  write_json(dir / "summary.json", summ);
  for (const auto& [key, _] : summ["layers"].items()) {
    artifacts.push_back("layer_" + key + ".json");
    artifacts.push_back("layer_" + key + ".bin");
  }
  write_manifest(Stage::kProbe, artifacts);
}

// ---------------------------------------------------------------- analyze

void Experiment::run_analyze() {
  const fs::path backbone_path = config_.output / "train" / "model";
  if (!nn::checkpoint_exists(backbone_path)) missing("trained model", "afcc train");
  load_data();
  const nn::Checkpoint backbone = nn::load_checkpoint(backbone_path);
  const std::uint64_t fp = backbone.fingerprint();
  const bool on_test = config_.field_set == FieldSet::kTest;
  const auto& split = on_test ? *test_ : *train_;
  const int L = config_.architecture.num_labels;

  const fs::path dir = stage_dir(Stage::kAnalyze);
  json summ = fs::exists(dir / "summary.json") ? read_json(dir / "summary.json") : json::object();
  summ["field_set"] = on_test ? "test" : "train";
  json artifacts = {"summary.json"};
  const auto cuts = cut_layers();
  for (const auto& tap : resolve_taps(config_.architecture, cuts)) {
    const fs::path probe_path = config_.output / "probe" / layer_stem(tap.cut_layer);
    if (!nn::checkpoint_exists(probe_path))
      missing("probe for layer " + std::to_string(tap.cut_layer), "afcc probe");
    const auto p = probe_from_checkpoint(nn::load_checkpoint(probe_path));
    if (p.backbone_fingerprint != fp)
      throw Error(ErrorCode::kPrerequisite, "probe for layer " + std::to_string(tap.cut_layer) +
                                                " was trained on a different model; rerun 'afcc probe'");
    const auto features = probe::make_feature_set(backbone.net, tap.cut_layer, split.view());
    json warnings = json::array();
    if (metrics::labels_imbalanced(features.labels, L)) {
      warnings.push_back("per-label record counts differ by more than 5%");
      log("analyze: warning: imbalanced labels in the field set");
    }
    const auto matrices = metrics::all_filter_fields(p, features);
    const double th = tap.dense ? config_.fc_node_threshold : config_.conv_threshold;
    const auto profiles = metrics::profile_layer(matrices, th);
    const auto stats = metrics::layer_stats(profiles);

    json filters = json::array();
    std::ostringstream csv;
    csv.precision(9);
    csv << "filter,label";
    for (int j = 0; j < L; ++j) csv << ",field_" << j;
    csv << '\n';
    for (std::size_t f = 0; f < profiles.size(); ++f) {
      const auto norm = metrics::normalize(matrices[f]);
      json entry = profile_to_json(profiles[f]);
      entry["field"] = norm.values;
      entry["nonpositive_field"] = norm.dead;
      filters.push_back(entry);
      for (int i = 0; i < L; ++i) {
        csv << f << ',' << i;
        for (int j = 0; j < L; ++j) csv << ',' << norm.at(i, j);
        csv << '\n';
      }
    }
    const std::string stem = layer_stem(tap.cut_layer);
    write_json(dir / (stem + ".json"), {{"cut_layer", tap.cut_layer},
                                        {"owner", tap.owner},
                                        {"dense", tap.dense},
                                        {"threshold", th},
                                        {"field_set", summ["field_set"]},
                                        {"backbone_fingerprint", fp},
                                        {"stats", stats_to_json(stats)},
                                        {"warnings", warnings},
                                        {"filters", filters}});
    write_text_atomic(dir / (stem + "_fields.csv"), csv.str());
    summ["layers"][std::to_string(tap.cut_layer)] = stats_to_json(stats);
    log("analyze: layer " + std::to_string(tap.cut_layer) + "  N_c " + fmt(stats.n_c) + "  C_s " +
        fmt(stats.c_s) + "  diagonal " + fmt(stats.diagonal) + "  noise " + fmt(stats.noise));
  }
  write_json(dir / "summary.json", summ);
  for (const auto& [key, _] : summ["layers"].items()) {
    artifacts.push_back("layer_" + key + ".json");
    artifacts.push_back("layer_" + key + "_fields.csv");
  }
  write_manifest(Stage::kAnalyze, artifacts);
}

// ---------------------------------------------------------------- prune

namespace {

LayerAnalysis load_analysis(const fs::path& root, int cut, bool required) {
  const fs::path p = root / "analyze" / (layer_stem(cut) + ".json");
  LayerAnalysis a;
  if (!fs::exists(p)) {
    if (required) missing("cluster analysis for layer " + std::to_string(cut), "afcc analyze");
    return a;
  }
  a.doc = read_json(p);
  for (const auto& f : a.doc.at("filters")) a.profiles.push_back(profile_from_json(f));
  a.diagonal = a.doc.at("stats").at("diagonal").get<double>();
  return a;
}

std::vector<std::vector<int>> singleton_labels(int L) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(L));
  for (int y = 0; y < L; ++y) out[static_cast<std::size_t>(y)] = {y};
  return out;
}

}  // namespace

void Experiment::run_prune() {
  const auto& spec = config_.architecture;
  const int L = spec.num_labels;
  const Scheme scheme = config_.scheme;
  const std::string scheme_name = pruning::to_string(scheme);
  const auto cuts = config_.probe_layers.empty() ? auto_probe_layers(spec) : config_.probe_layers;
  const auto taps = resolve_taps(spec, cuts);
  const auto links = find_links(spec, taps);
  const fs::path dir = stage_dir(Stage::kPrune);

  nn::Checkpoint ckpt;
  json summ = {{"scheme", scheme_name}};
  json link_docs = json::array();

  if (scheme == Scheme::kArtificialAfcc) {
    // Assignment needs no trained model; only the base size may come from
    // measured statistics.
    int base = config_.artificial.base_size;
    if (base <= 0) {
      const auto top = load_analysis(config_.output, taps.back().cut_layer, true);
      base = static_cast<int>(std::floor(top.diagonal)) + 1;
      summ["base_size_from_diagonal"] = top.diagonal;
    }
    base = std::min(base, L);
    std::vector<int> counts;
    for (const auto& t : taps) counts.push_back(t.units);
    const auto assign = pruning::a_afcc_assign(counts, base, config_.artificial.increment, L,
                                               Rng::mix(config_.seed, kAssignSalt));
    ckpt.net = nn::Network<float>(spec);
    ckpt.net.initialize(Rng::mix(config_.seed, kInitSalt));
    json layers = json::array();
    for (std::size_t k = 0; k < taps.size(); ++k)
      layers.push_back({{"cut_layer", taps[k].cut_layer},
                        {"cluster_size", assign[k].cluster_size},
                        {"coverage_spread", assign[k].coverage_spread()},
                        {"labels", assign[k].labels}});
    for (const auto& link : links) {
      const auto& prev = assign[static_cast<std::size_t>(link.prev)].labels;
      const auto mask = link.next < 0
                            ? pruning::intersection_mask(prev, singleton_labels(L))
                            : pruning::intersection_mask(
                                  prev, assign[static_cast<std::size_t>(link.next)].labels);
      if (mask.kept() == 0)
        throw Error(ErrorCode::kPrerequisite,
                    "A-AFCC mask for layer " + std::to_string(link.layer) + " keeps no connection");
      const double rate = pruning::measured_dilution(mask);
      ckpt.masks.push_back({link.layer, taps[static_cast<std::size_t>(link.prev)].owner,
                            scheme_name, config_.seed, rate, mask});
      link_docs.push_back({{"layer", link.layer}, {"rate", rate}});
    }
    summ["base_size"] = base;
    summ["increment"] = config_.artificial.increment;
    summ["layers"] = layers;
    ckpt.install_masks();
    ckpt.seed = config_.seed;
    ckpt.meta = {{"stage", "prune"}, {"scheme", scheme_name}};
    summ["links"] = link_docs;
    nn::save_checkpoint(dir / "model", ckpt);
    write_json(dir / "summary.json", summ);
    write_manifest(Stage::kPrune, {"model.json", "model.bin", "model.masks.bin", "summary.json"});
    log("prune: A-AFCC masks installed on an untrained model (base size " + std::to_string(base) + ")");
    return;
  }

  const fs::path backbone_path = config_.output / "train" / "model";
  if (!nn::checkpoint_exists(backbone_path)) missing("trained model", "afcc train");
  load_data();
  ckpt = nn::load_checkpoint(backbone_path);
  const double baseline_acc = nn::accuracy(ckpt.net, test_->view());

  const bool random = scheme == Scheme::kRandomFilter || scheme == Scheme::kRandomWeight;
  const bool need_profiles = !random || config_.random_rates.empty();
  std::vector<LayerAnalysis> analysis;
  for (const auto& t : taps) analysis.push_back(load_analysis(config_.output, t.cut_layer, need_profiles));

  json removed = json::array();
  std::size_t pruned_links = 0;
  for (std::size_t li = 0; li < links.size(); ++li) {
    const auto& link = links[li];
    const auto& prev_tap = taps[static_cast<std::size_t>(link.prev)];
    const bool to_output = link.next < 0;
    const bool dense_pair = prev_tap.dense && !to_output &&
                            taps[static_cast<std::size_t>(link.next)].dense;
    if ((scheme == Scheme::kFcNode) != dense_pair) continue;
    const auto& prev = analysis[static_cast<std::size_t>(link.prev)];
    const LayerAnalysis* next = to_output ? nullptr : &analysis[static_cast<std::size_t>(link.next)];
    const int rows = to_output ? L : taps[static_cast<std::size_t>(link.next)].units;
    const int cols = prev_tap.units;

    auto afcc = [&] {
      return to_output ? pruning::afcc_output_mask(prev.profiles, L)
                       : pruning::afcc_mask(prev.profiles, next->profiles);
    };
    nn::MaskRecord rec;
    rec.layer = link.layer;
    rec.source_layer = prev_tap.owner;
    rec.scheme = scheme_name;
    json doc = {{"layer", link.layer}, {"prev_cut", prev_tap.cut_layer}};
    doc["next_cut"] = to_output ? json(nullptr) : json(taps[static_cast<std::size_t>(link.next)].cut_layer);
    switch (scheme) {
      case Scheme::kAfcc:
        rec.mask = afcc();
        break;
      case Scheme::kFcNode: {
        auto r = pruning::fc_node_mask(prev.profiles, next->profiles, config_.remove_noise_nodes);
        rec.mask = std::move(r.mask);
        removed.push_back({{"layer", link.layer}, {"prev", r.removed_prev}, {"next", r.removed_next}});
        break;
      }
      default: {
        const double rate = pruned_links < config_.random_rates.size()
                                ? config_.random_rates[pruned_links]
                                : pruning::measured_dilution(afcc());
        rec.seed = Rng::mix(config_.seed, kRandomMaskSalt + li);
        if (scheme == Scheme::kRandomFilter) {
          rec.mask = pruning::r_afcc_filter_mask(rows, cols, rate, rec.seed);
        } else {
          const auto fan_in = static_cast<int>(ckpt.net.params(link.layer).weight.size() /
                                               static_cast<std::size_t>(rows));
          rec.mask = pruning::r_afcc_weight_mask(rows, fan_in, rate, rec.seed);
          rec.source_layer = -1;
        }
        doc["target_rate"] = rate;
        break;
      }
    }
    rec.rate = pruning::measured_dilution(rec.mask);
    doc["rate"] = rec.rate;
    doc["granularity"] = afcc::to_string(rec.mask.granularity);
    if (!prev.profiles.empty() && (to_output || !next->profiles.empty()))
      doc["estimated"] = pruning::estimate_dilution(prev.diagonal, to_output ? 1.0 : next->diagonal, L);
    if (rec.mask.granularity == Granularity::kFilterPair) {
      const auto conn = pruning::check_connectivity(rec.mask);
      doc["rows_without_inbound"] = conn.rows_without_inbound;
      doc["cols_without_outbound"] = conn.cols_without_outbound;
      if (!conn.rows_without_inbound.empty())
        log("prune: warning: layer " + std::to_string(link.layer) + " has " +
            std::to_string(conn.rows_without_inbound.size()) + " units without inbound connections");
    }
    ckpt.masks.push_back(std::move(rec));
    link_docs.push_back(doc);
    ++pruned_links;
  }
  if (ckpt.masks.empty())
    throw Error(ErrorCode::kInvalidArgument, "scheme " + scheme_name + " found no layer pair to prune");
  ckpt.install_masks();
  const double acc = nn::accuracy(ckpt.net, test_->view());
  ckpt.seed = config_.seed;
  ckpt.meta = {{"stage", "prune"}, {"scheme", scheme_name}, {"accuracy", acc}};
  summ["baseline_accuracy"] = baseline_acc;
  summ["accuracy"] = acc;
  summ["links"] = link_docs;
  if (!removed.empty()) summ["removed_nodes"] = removed;
  nn::save_checkpoint(dir / "model", ckpt);
  write_json(dir / "summary.json", summ);
  write_manifest(Stage::kPrune, {"model.json", "model.bin", "model.masks.bin", "summary.json"});
  log("prune: " + scheme_name + " immediate accuracy " + fmt(acc) + " (baseline " + fmt(baseline_acc) + ")");
}

// ---------------------------------------------------------------- finetune

void Experiment::run_finetune() {
  if (config_.scheme == Scheme::kArtificialAfcc)
    throw Error(ErrorCode::kInvalidArgument,
                "A-AFCC models train from scratch; use 'afcc train --scheme a-afcc'");
  const fs::path pruned = stage_dir(Stage::kPrune) / "model";
  if (!nn::checkpoint_exists(pruned))
    missing("pruned model", "afcc prune --scheme " + pruning::to_string(config_.scheme));
  load_data();
  nn::Checkpoint ckpt = nn::load_checkpoint(pruned);
  const double before = nn::accuracy(ckpt.net, test_->view());
  nn::TrainConfig tc = config_.finetune;
  tc.seed = Rng::mix(config_.seed, kFinetuneSalt);
  const auto test_view = test_->view();
  nn::TrainOptions opt;
  opt.augment = data::make_augmenter(train_->shape, config_.augment);
  opt.eval = &test_view;
  opt.verbose = static_cast<bool>(logger_);
  const auto history = nn::train(ckpt.net, train_->view(), tc, opt);
  const double acc = nn::accuracy(ckpt.net, test_view);
  ckpt.epoch += tc.epochs;
  ckpt.meta["stage"] = "finetune";
  ckpt.meta["accuracy"] = acc;
  const fs::path dir = stage_dir(Stage::kFinetune);
  nn::save_checkpoint(dir / "model", ckpt);
  write_json(dir / "summary.json", {{"scheme", pruning::to_string(config_.scheme)},
                                    {"immediate_accuracy", before},
                                    {"accuracy", acc},
                                    {"epochs", tc.epochs},
                                    {"log", log_to_json(history)}});
  write_manifest(Stage::kFinetune, {"model.json", "model.bin", "model.masks.bin", "summary.json"});
  log("finetune: " + pruning::to_string(config_.scheme) + " accuracy " + fmt(acc));
}

// ---------------------------------------------------------------- report

void Experiment::run_report() {
  const auto& spec = config_.architecture;
  const int L = spec.num_labels;
  const Scheme scheme = config_.scheme;
  const std::string scheme_name = pruning::to_string(scheme);
  const auto cuts = config_.probe_layers.empty() ? auto_probe_layers(spec) : config_.probe_layers;
  const auto taps = resolve_taps(spec, cuts);
  const auto links = find_links(spec, taps);
  const fs::path root = config_.output;

  const fs::path probe_summary = root / "probe" / "summary.json";
  if (!fs::exists(probe_summary)) missing("probe results", "afcc probe");
  const json probes = read_json(probe_summary);
  std::vector<LayerAnalysis> analysis;
  for (const auto& t : taps) analysis.push_back(load_analysis(root, t.cut_layer, true));

  // Most advanced model of the scheme; the baseline when none exists.
  std::vector<std::pair<fs::path, std::string>> candidates;
  if (scheme == Scheme::kArtificialAfcc) {
    candidates = {{root / "train" / scheme_name, "train"}, {root / "prune" / scheme_name, "prune"}};
  } else {
    candidates = {{root / "finetune" / scheme_name, "finetune"},
                  {root / "prune" / scheme_name, "prune"}};
  }
  candidates.emplace_back(root / "train", "train");
  fs::path model_dir;
  std::string source;
  for (const auto& [d, s] : candidates)
    if (nn::checkpoint_exists(d / "model")) {
      model_dir = d;
      source = s;
      break;
    }
  if (model_dir.empty()) missing("trained model", "afcc train");
  const nn::Checkpoint model = nn::load_checkpoint(model_dir / "model");
  const json model_summary = read_json(model_dir / "summary.json");
  const double net_acc = model_summary.value("accuracy", -1.0);

  std::vector<std::vector<std::uint8_t>> weight_masks;
  for (int i = 0; i < model.net.num_layers(); ++i) weight_masks.push_back(model.net.params(i).weight_mask);
  const auto cost = accounting::network_cost(spec, weight_masks);
  auto layer_cost = [&](int layer) -> const accounting::LayerCost* {
    for (const auto& c : cost.layers)
      if (c.layer == layer) return &c;
    return nullptr;
  };
  auto measured_into = [&](int layer) -> std::optional<double> {
    std::optional<double> out;
    for (const auto& r : model.masks)
      if (r.layer == layer) out = out ? std::max(*out, r.rate) : r.rate;
    return out;
  };

  std::ostringstream csv;
  csv << "layer,accuracy,N_c,C_s,diagonal,noise,dilution_est,dilution_measured,params_masked,"
         "macs_masked\n";
  json rows = json::array();
  auto emit = [&](int layer, double acc, const json* stats, std::optional<double> est,
                  std::optional<double> measured, const accounting::LayerCost* c) {
    json row = {{"layer", layer}, {"accuracy", acc}};
    csv << layer << ',' << fmt(acc) << ',';
    if (stats) {
      csv << fmt((*stats)["n_c"].get<double>()) << ',' << fmt((*stats)["c_s"].get<double>()) << ','
          << fmt((*stats)["diagonal"].get<double>()) << ',' << fmt((*stats)["noise"].get<double>());
      row["stats"] = *stats;
    } else {
      csv << ",,,";
    }
    csv << ',' << (est ? fmt(*est) : "") << ',' << (measured ? fmt(*measured) : "") << ',';
    csv << (c ? fmt(c->params_masked) : "") << ',' << (c ? fmt(c->macs_masked) : "") << '\n';
    if (est) row["dilution_est"] = *est;
    if (measured) row["dilution_measured"] = *measured;
    if (c) {
      row["params_masked"] = c->params_masked;
      row["macs_masked"] = c->macs_masked;
    }
    rows.push_back(row);
  };

  for (std::size_t k = 0; k < taps.size(); ++k) {
    const auto& t = taps[k];
    const std::string key = std::to_string(t.cut_layer);
    if (!probes.contains("layers") || !probes["layers"].contains(key))
      missing("probe for layer " + key, "afcc probe");
    const json stats = analysis[k].doc.at("stats");
    std::optional<double> est, measured;
    for (const auto& link : links)
      if (link.next == static_cast<int>(k)) {
        est = pruning::estimate_dilution(analysis[static_cast<std::size_t>(link.prev)].diagonal,
                                         analysis[k].diagonal, L);
        measured = measured_into(t.owner).value_or(0.0);
      }
    emit(t.cut_layer, probes["layers"][key]["accuracy"].get<double>(), &stats, est, measured,
         layer_cost(t.owner));
  }
  const int output = static_cast<int>(spec.layers.size()) - 1;
  std::optional<double> out_est, out_measured;
  for (const auto& link : links)
    if (link.next < 0) {
      out_est = pruning::estimate_dilution(analysis[static_cast<std::size_t>(link.prev)].diagonal, 1.0, L);
      out_measured = measured_into(output).value_or(0.0);
    }
  emit(output, net_acc, nullptr, out_est, out_measured, layer_cost(output));

  const fs::path dir = stage_dir(Stage::kReport);
  const std::string table = "table_" + scheme_name + ".csv";
  const std::string cost_file = "cost_" + scheme_name + ".csv";
  write_text_atomic(dir / table, csv.str());
  write_text_atomic(dir / cost_file, accounting::cost_csv(cost));
  json summ = fs::exists(dir / "summary.json") ? read_json(dir / "summary.json") : json::object();
  summ[scheme_name] = {{"model", source},
                       {"accuracy", net_acc},
                       {"rows", rows},
                       {"params_dense", cost.params_dense},
                       {"params_masked", cost.params_masked},
                       {"macs_dense", cost.macs_dense},
                       {"macs_masked", cost.macs_masked},
                       {"flops_dense", cost.flops_dense()},
                       {"flops_masked", cost.flops_masked()}};
  write_json(dir / "summary.json", summ);
  json artifacts = {"summary.json"};
  for (const auto& [key, _] : summ.items()) {
    artifacts.push_back("table_" + key + ".csv");
    artifacts.push_back("cost_" + key + ".csv");
  }
  write_manifest(Stage::kReport, artifacts);
  log("report: wrote " + (dir / table).string());
}

// ---------------------------------------------------------------- render

void Experiment::run_render() {
  const fs::path dir = stage_dir(Stage::kRender);
  json artifacts = json::array();
  for (int cut : cut_layers()) {
    const auto a = load_analysis(config_.output, cut, true);
    const double th = a.doc.at("threshold").get<double>();
    const std::string stem = layer_stem(cut);
    fs::create_directories(dir / stem);
    const auto& filters = a.doc.at("filters");
    for (std::size_t f = 0; f < filters.size(); ++f) {
      metrics::FieldMatrix m;
      m.labels = config_.architecture.num_labels;
      m.values = filters[f].at("field").get<std::vector<double>>();
      m.normalized = true;
      m.dead = filters[f].at("nonpositive_field").get<bool>();
      const auto clipped = metrics::clip(m, th);
      const auto ppm = metrics::render_ppm(clipped, a.profiles[f]);
      const std::string name = stem + "/filter_" + std::to_string(f) + ".ppm";
      write_file_atomic(dir / name, ppm);
      artifacts.push_back(name);
    }
    log("render: " + std::to_string(filters.size()) + " images for layer " + std::to_string(cut));
  }
  write_manifest(Stage::kRender, artifacts);
}

}  // namespace afcc::pipeline
