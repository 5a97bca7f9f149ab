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

#include "nn/checkpoint.hpp"

#include <type_traits>

#include "common/error.hpp"
#include "common/fs_util.hpp"

namespace afcc::nn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path with_suffix(const fs::path& stem, const std::string& suffix) {
  fs::path p = stem;
  p += suffix;
  return p;
}

}  // namespace

fs::path manifest_path(const fs::path& stem) { return with_suffix(stem, ".json"); }

bool checkpoint_exists(const fs::path& stem) { return fs::exists(manifest_path(stem)); }

std::vector<std::uint8_t> expand_for_layer(const Network<float>& net, int layer,
                                           const ConnectionMask& mask) {
  const auto& spec = net.spec().layers.at(static_cast<std::size_t>(layer));
  const std::size_t weights = net.params(layer).weight.size();
  if (mask.granularity == Granularity::kWeight) {
    if (mask.total() != weights) throw ShapeError(layer, "weight mask size mismatch");
    return mask.keep;
  }
  int rows = 0, fan_in = 0;
  if (const auto* c = std::get_if<Conv2D>(&spec)) {
    rows = c->out_channels;
    fan_in = c->in_channels * c->kernel_h * c->kernel_w;
  } else if (const auto* d = std::get_if<Dense>(&spec)) {
    rows = d->out_features;
    fan_in = d->in_features;
  } else {
    throw ShapeError(layer, "layer has no weights to mask");
  }
  if (mask.rows != rows || mask.cols <= 0 || fan_in % mask.cols != 0)
    throw ShapeError(layer, "filter-pair mask " + std::to_string(mask.rows) + "x" +
                                std::to_string(mask.cols) + " does not tile the weights");
  return mask.expand(fan_in / mask.cols).keep;
}

void Checkpoint::install_masks() {
  for (int i = 0; i < net.num_layers(); ++i)
    if (!net.params(i).empty()) net.clear_mask(i);
  // Several records on one layer combine by intersection.
  std::vector<std::vector<std::uint8_t>> combined(static_cast<std::size_t>(net.num_layers()));
  for (const auto& rec : masks) {
    auto w = expand_for_layer(net, rec.layer, rec.mask);
    auto& dst = combined.at(static_cast<std::size_t>(rec.layer));
    if (dst.empty()) {
      dst = std::move(w);
    } else {
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = dst[i] & w[i];
    }
  }
  for (int i = 0; i < net.num_layers(); ++i) {
    auto& w = combined[static_cast<std::size_t>(i)];
    if (w.empty()) continue;
    const auto& p = net.params(i);
    std::vector<std::uint8_t> bias_mask;
    if (!p.bias.empty()) {
      const std::size_t rows = p.bias.size();
      const std::size_t fan_in = w.size() / rows;
      bias_mask.assign(rows, 0);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t k = 0; k < fan_in; ++k)
          if (w[r * fan_in + k]) {
            bias_mask[r] = 1;
            break;
          }
    }
    net.install_mask(i, std::move(w), std::move(bias_mask));
  }
}

std::uint64_t Checkpoint::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int i = 0; i < net.num_layers(); ++i) {
    const auto& p = net.params(i);
    std::vector<std::uint8_t> bytes;
    append_f32le(bytes, p.weight);
    append_f32le(bytes, p.bias);
    bytes.insert(bytes.end(), p.weight_mask.begin(), p.weight_mask.end());
    bytes.insert(bytes.end(), p.bias_mask.begin(), p.bias_mask.end());
    h = fnv1a(bytes, h);
  }
  return h;
}

json spec_to_json(const NetworkSpec& spec) {
  json layers = json::array();
  for (const auto& layer : spec.layers) {
    std::visit(
        [&](const auto& l) {
          using L = std::decay_t<decltype(l)>;
          json j;
          if constexpr (std::is_same_v<L, Conv2D>) {
            j = {{"type", "conv"},         {"in", l.in_channels}, {"out", l.out_channels},
                 {"kernel", {l.kernel_h, l.kernel_w}}, {"stride", l.stride},
                 {"pad", l.pad},           {"bias", l.has_bias}};
          } else if constexpr (std::is_same_v<L, MaxPool>) {
            j = {{"type", "maxpool"}, {"kernel", l.kernel}, {"stride", l.stride}};
          } else if constexpr (std::is_same_v<L, Dense>) {
            j = {{"type", "dense"}, {"in", l.in_features}, {"out", l.out_features},
                 {"bias", l.has_bias}};
          } else if constexpr (std::is_same_v<L, ReLU>) {
            j = {{"type", "relu"}};
          } else {
            j = {{"type", "flatten"}};
          }
          layers.push_back(j);
        },
        layer);
  }
  return {{"input", {spec.input.channels, spec.input.height, spec.input.width}},
          {"num_labels", spec.num_labels},
          {"layers", layers}};
}

NetworkSpec spec_from_json(const json& j) {
  try {
    NetworkSpec spec;
    const auto& in = j.at("input");
    if (!in.is_array() || in.size() != 3)
      throw Error(ErrorCode::kFormat, "input must be [channels, height, width]");
    spec.input = {in[0].get<int>(), in[1].get<int>(), in[2].get<int>()};
    spec.num_labels = j.at("num_labels").get<int>();
    // in/in_features may be omitted and are then inferred from the running shape.
    Shape3 cur = spec.input;
    int index = 0;
    for (const auto& l : j.at("layers")) {
      const auto type = l.at("type").get<std::string>();
      if (type == "conv") {
        Conv2D c;
        c.in_channels = l.value("in", cur.channels);
        c.out_channels = l.at("out").get<int>();
        if (l.contains("kernel") && l["kernel"].is_array()) {
          c.kernel_h = l["kernel"][0].get<int>();
          c.kernel_w = l["kernel"][1].get<int>();
        } else {
          c.kernel_h = c.kernel_w = l.value("kernel", 3);
        }
        c.stride = l.value("stride", 1);
        c.pad = l.value("pad", 0);
        c.has_bias = l.value("bias", true);
        spec.layers.emplace_back(c);
      } else if (type == "maxpool") {
        MaxPool m;
        m.kernel = l.value("kernel", 2);
        m.stride = l.value("stride", m.kernel);
        spec.layers.emplace_back(m);
      } else if (type == "dense") {
        Dense d;
        d.in_features = l.value("in", static_cast<int>(cur.size()));
        d.out_features = l.at("out").get<int>();
        d.has_bias = l.value("bias", true);
        spec.layers.emplace_back(d);
      } else if (type == "relu") {
        spec.layers.emplace_back(ReLU{});
      } else if (type == "flatten") {
        spec.layers.emplace_back(Flatten{});
      } else {
        throw ShapeError(index, "unknown layer type '" + type + "'");
      }
      NetworkSpec partial = spec;
      cur = partial.output_shapes().back();
      ++index;
    }
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad architecture: ") + e.what());
  }
}

void save_checkpoint(const fs::path& stem, const Checkpoint& ckpt) {
  json manifest;
  manifest["format"] = "afcc-checkpoint";
  manifest["version"] = 1;
  manifest["architecture"] = spec_to_json(ckpt.net.spec());
  manifest["epoch"] = ckpt.epoch;
  manifest["seed"] = ckpt.seed;
  manifest["data"] = with_suffix(stem, ".bin").filename().string();
  for (const auto& [k, v] : ckpt.meta.items()) manifest[k] = v;

  std::vector<std::uint8_t> blob;
  json tensors = json::array();
  for (int i = 0; i < ckpt.net.num_layers(); ++i) {
    const auto& p = ckpt.net.params(i);
    if (p.empty()) continue;
    for (const auto* name : {"weight", "bias"}) {
      const auto& t = std::string(name) == "weight" ? p.weight : p.bias;
      if (t.empty()) continue;
      tensors.push_back({{"layer", i}, {"name", name}, {"offset", blob.size()},
                         {"count", t.size()}});
      append_f32le(blob, t);
    }
  }
  manifest["tensors"] = tensors;

  json masks = json::array();
  std::vector<std::uint8_t> mask_blob;
  for (const auto& rec : ckpt.masks) {
    const auto packed = pack_bits(rec.mask.keep);
    masks.push_back({{"layer", rec.layer},
                     {"layer_pair", {rec.source_layer, rec.layer}},
                     {"granularity", to_string(rec.mask.granularity)},
                     {"scheme", rec.scheme},
                     {"seed", rec.seed},
                     {"rate", rec.rate},
                     {"rows", rec.mask.rows},
                     {"cols", rec.mask.cols},
                     {"offset", mask_blob.size()},
                     {"nbytes", packed.size()}});
    mask_blob.insert(mask_blob.end(), packed.begin(), packed.end());
  }
  manifest["masks"] = masks;
  if (!ckpt.masks.empty()) {
    manifest["mask_data"] = with_suffix(stem, ".masks.bin").filename().string();
    write_file_atomic(with_suffix(stem, ".masks.bin"), mask_blob);
  }
  write_file_atomic(with_suffix(stem, ".bin"), blob);
  write_text_atomic(manifest_path(stem), manifest.dump(2) + "\n");
}

Checkpoint load_checkpoint(const fs::path& stem) {
  const auto mpath = manifest_path(stem);
  if (!fs::exists(mpath)) throw Error(ErrorCode::kIo, "checkpoint not found: " + mpath.string());
  json manifest;
  try {
    manifest = json::parse(read_text(mpath));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, mpath.string() + ": " + e.what());
  }
  if (manifest.value("format", "") != "afcc-checkpoint")
    throw Error(ErrorCode::kFormat, mpath.string() + ": not an afcc checkpoint");
  try {
    Checkpoint ckpt;
    ckpt.net = Network<float>(spec_from_json(manifest.at("architecture")));
    ckpt.epoch = manifest.at("epoch").get<int>();
    ckpt.seed = manifest.at("seed").get<std::uint64_t>();
    const auto dir = stem.parent_path();
    const auto blob = read_file(dir / manifest.at("data").get<std::string>());
    for (const auto& t : manifest.at("tensors")) {
      const int layer = t.at("layer").get<int>();
      auto& p = ckpt.net.params(layer);
      auto& dst = t.at("name").get<std::string>() == "weight" ? p.weight : p.bias;
      const auto count = t.at("count").get<std::size_t>();
      if (count != dst.size()) throw ShapeError(layer, "stored tensor size mismatch");
      dst = parse_f32le(blob, t.at("offset").get<std::size_t>(), count);
    }
    if (!manifest.at("masks").empty()) {
      const auto mblob = read_file(dir / manifest.at("mask_data").get<std::string>());
      for (const auto& m : manifest.at("masks")) {
        MaskRecord rec;
        rec.layer = m.at("layer").get<int>();
        rec.source_layer = m.at("layer_pair")[0].get<int>();
        rec.scheme = m.at("scheme").get<std::string>();
        rec.seed = m.at("seed").get<std::uint64_t>();
        rec.rate = m.at("rate").get<double>();
        rec.mask.rows = m.at("rows").get<int>();
        rec.mask.cols = m.at("cols").get<int>();
        rec.mask.granularity = granularity_from_string(m.at("granularity").get<std::string>());
        const auto off = m.at("offset").get<std::size_t>();
        const auto nbits = static_cast<std::size_t>(rec.mask.rows) * rec.mask.cols;
        if (off + (nbits + 7) / 8 > mblob.size()) throw FormatError(mblob.size(), "mask data truncated");
        rec.mask.keep = unpack_bits(mblob.data() + off, nbits);
        ckpt.masks.push_back(std::move(rec));
      }
    }
    static const std::set<std::string> kCore{"format", "version", "architecture", "epoch",
                                             "seed",   "data",    "tensors",      "masks",
                                             "mask_data"};
    for (const auto& [k, v] : manifest.items())
      if (!kCore.count(k)) ckpt.meta[k] = v;
    ckpt.install_masks();
    return ckpt;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, mpath.string() + ": " + e.what());
  }
}

}  // namespace afcc::nn
