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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "common/rng.hpp"
#include "nn/layer_spec.hpp"
#include "nn/trainer.hpp"

namespace afcc::data {

enum class Format { kCifarBinary, kIdx };

Format format_from_string(const std::string& s);
std::string to_string(Format f);

struct AugmentPolicy {
  bool horizontal_flip = true;
  int max_translate = 4;
};

// Raw 8-bit images (CHW per record) plus the [-1, 1] normalized copy the
// engine trains on.
struct DatasetSplit {
  nn::Shape3 shape;
  int num_labels = 0;
  std::vector<std::uint8_t> pixels;
  std::vector<int> labels;
  std::vector<float> normalized;

  int size() const { return static_cast<int>(labels.size()); }
  nn::LabeledData view() const { return {normalized, labels, shape}; }

  // Recomputes `normalized` from `pixels`.
  void normalize();
  // First `limit` records (all when limit <= 0 or larger than the split).
  DatasetSplit head(int limit) const;
  // Records at `indices`, in that order.
  DatasetSplit select(std::span<const int> indices) const;
  // Per-label record counts.
  std::vector<int> label_counts() const;
};

// p / 255 * 2 - 1
inline float normalize_pixel(std::uint8_t p) {
  return static_cast<float>(static_cast<double>(p) / 255.0 * 2.0 - 1.0);
}

// CIFAR binary: records of `label_bytes` label bytes (the last one is used,
// i.e. the fine label for CIFAR-100) followed by 3x32x32 pixel bytes.
DatasetSplit parse_cifar(std::span<const std::uint8_t> bytes, int label_bytes = 1);
std::vector<std::uint8_t> encode_cifar(const DatasetSplit& split, int label_bytes = 1);

// IDX (MNIST-style): big-endian header, 0x00000803 images / 0x00000801 labels.
DatasetSplit parse_idx(std::span<const std::uint8_t> images,
                       std::span<const std::uint8_t> labels);
std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>> encode_idx(
    const DatasetSplit& split);

struct LoadOptions {
  int label_bytes = 0;  // 0: 2 for train.bin/test.bin layouts, 1 otherwise
  int num_labels = 0;   // 0: max label + 1
  int train_limit = 0;
  int test_limit = 0;
};

// Reads a dataset directory:
//   cifar-binary: data_batch_*.bin + test_batch.bin, or train.bin + test.bin
//   idx: train-images-idx3-ubyte, train-labels-idx1-ubyte,
//        t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte
// Both splits come back normalized, in file order.
std::pair<DatasetSplit, DatasetSplit> load_dataset(const std::filesystem::path& dir,
                                                   Format format,
                                                   const LoadOptions& options = {});

// Random horizontal flip (p = 0.5) and integer shift in
// [-max_translate, max_translate] per axis with zero fill.
void augment(std::span<float> batch, int n, const nn::Shape3& shape,
             const AugmentPolicy& policy, Rng& rng);

nn::Augment make_augmenter(const nn::Shape3& shape, const AugmentPolicy& policy);

}  // namespace afcc::data
