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

#include "data/dataset.hpp"

#include <algorithm>
#include <regex>

#include "common/error.hpp"
#include "common/fs_util.hpp"

namespace afcc::data {

namespace fs = std::filesystem;

Format format_from_string(const std::string& s) {
  if (s == "cifar-binary") return Format::kCifarBinary;
  if (s == "idx") return Format::kIdx;
  throw Error(ErrorCode::kInvalidArgument, "unknown dataset format '" + s + "'");
}

std::string to_string(Format f) { return f == Format::kCifarBinary ? "cifar-binary" : "idx"; }

void DatasetSplit::normalize() {
  normalized.resize(pixels.size());
  std::transform(pixels.begin(), pixels.end(), normalized.begin(), normalize_pixel);
}

DatasetSplit DatasetSplit::head(int limit) const {
  if (limit <= 0 || limit >= size()) return *this;
  std::vector<int> idx(static_cast<std::size_t>(limit));
  for (int i = 0; i < limit; ++i) idx[static_cast<std::size_t>(i)] = i;
  return select(idx);
}

DatasetSplit DatasetSplit::select(std::span<const int> indices) const {
  DatasetSplit out;
  out.shape = shape;
  out.num_labels = num_labels;
  const std::size_t rec = shape.size();
  out.pixels.reserve(indices.size() * rec);
  out.labels.reserve(indices.size());
  for (int i : indices) {
    const auto off = static_cast<std::size_t>(i) * rec;
    out.pixels.insert(out.pixels.end(), pixels.begin() + static_cast<std::ptrdiff_t>(off),
                      pixels.begin() + static_cast<std::ptrdiff_t>(off + rec));
    out.labels.push_back(labels[static_cast<std::size_t>(i)]);
  }
  if (!normalized.empty()) out.normalize();
  return out;
}

std::vector<int> DatasetSplit::label_counts() const {
  std::vector<int> counts(static_cast<std::size_t>(std::max(num_labels, 0)), 0);
  for (int l : labels)
    if (l >= 0 && l < num_labels) ++counts[static_cast<std::size_t>(l)];
  return counts;
}

DatasetSplit parse_cifar(std::span<const std::uint8_t> bytes, int label_bytes) {
  require(label_bytes == 1 || label_bytes == 2, "CIFAR label_bytes must be 1 or 2");
  constexpr std::size_t kPixels = 3 * 32 * 32;
  const std::size_t rec = static_cast<std::size_t>(label_bytes) + kPixels;
  if (bytes.empty()) throw FormatError(0, "empty CIFAR file");
  if (bytes.size() % rec != 0)
    throw FormatError(bytes.size() - bytes.size() % rec,
                      "truncated CIFAR record (file size not a multiple of " +
                          std::to_string(rec) + ")");
  DatasetSplit out;
  out.shape = {3, 32, 32};
  const std::size_t n = bytes.size() / rec;
  out.labels.resize(n);
  out.pixels.resize(n * kPixels);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t off = i * rec;
    out.labels[i] = bytes[off + static_cast<std::size_t>(label_bytes) - 1];
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(off + static_cast<std::size_t>(label_bytes)),
                kPixels, out.pixels.begin() + static_cast<std::ptrdiff_t>(i * kPixels));
  }
  out.num_labels = out.labels.empty() ? 0 : *std::max_element(out.labels.begin(), out.labels.end()) + 1;
  return out;
}

std::vector<std::uint8_t> encode_cifar(const DatasetSplit& split, int label_bytes) {
  require(split.shape == nn::Shape3{3, 32, 32}, "CIFAR records are 3x32x32");
  require(label_bytes == 1 || label_bytes == 2, "CIFAR label_bytes must be 1 or 2");
  const std::size_t px = split.shape.size();
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(split.size()) * (px + static_cast<std::size_t>(label_bytes)));
  for (int i = 0; i < split.size(); ++i) {
    const int label = split.labels[static_cast<std::size_t>(i)];
    require(label >= 0 && label < 256, "label does not fit in a byte");
    // Coarse labels are not tracked; write the fine label in both slots.
    for (int b = 0; b < label_bytes; ++b) out.push_back(static_cast<std::uint8_t>(label));
    const auto off = static_cast<std::ptrdiff_t>(static_cast<std::size_t>(i) * px);
    out.insert(out.end(), split.pixels.begin() + off,
               split.pixels.begin() + off + static_cast<std::ptrdiff_t>(px));
  }
  return out;
}

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t off) {
  if (off + 4 > b.size()) throw FormatError(off, "truncated IDX header");
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

}  // namespace

DatasetSplit parse_idx(std::span<const std::uint8_t> images,
                       std::span<const std::uint8_t> labels) {
  if (read_be32(images, 0) != 0x00000803u) throw FormatError(0, "bad IDX image magic");
  if (read_be32(labels, 0) != 0x00000801u) throw FormatError(0, "bad IDX label magic");
  const std::uint32_t n = read_be32(images, 4);
  const std::uint32_t rows = read_be32(images, 8);
  const std::uint32_t cols = read_be32(images, 12);
  const std::uint32_t nl = read_be32(labels, 4);
  if (nl != n) throw FormatError(4, "IDX label count differs from image count");
  if (rows == 0 || cols == 0) throw FormatError(8, "IDX image dimensions must be positive");
  const std::size_t px = static_cast<std::size_t>(rows) * cols;
  const std::size_t need = 16 + static_cast<std::size_t>(n) * px;
  if (images.size() != need)
    throw FormatError(std::min(images.size(), need), "IDX image payload size mismatch");
  if (labels.size() != 8 + static_cast<std::size_t>(n))
    throw FormatError(std::min(labels.size(), 8 + static_cast<std::size_t>(n)),
                      "IDX label payload size mismatch");
  DatasetSplit out;
  out.shape = {1, static_cast<int>(rows), static_cast<int>(cols)};
  out.pixels.assign(images.begin() + 16, images.end());
  out.labels.assign(labels.begin() + 8, labels.end());
  out.num_labels = out.labels.empty() ? 0 : *std::max_element(out.labels.begin(), out.labels.end()) + 1;
  return out;
}

std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>> encode_idx(
    const DatasetSplit& split) {
  require(split.shape.channels == 1, "IDX images are single-channel");
  std::vector<std::uint8_t> img, lab;
  put_be32(img, 0x00000803u);
  put_be32(img, static_cast<std::uint32_t>(split.size()));
  put_be32(img, static_cast<std::uint32_t>(split.shape.height));
  put_be32(img, static_cast<std::uint32_t>(split.shape.width));
  img.insert(img.end(), split.pixels.begin(), split.pixels.end());
  put_be32(lab, 0x00000801u);
  put_be32(lab, static_cast<std::uint32_t>(split.size()));
  for (int l : split.labels) lab.push_back(static_cast<std::uint8_t>(l));
  return {img, lab};
}

namespace {

void append(DatasetSplit& dst, DatasetSplit&& src) {
  if (dst.labels.empty()) {
    dst = std::move(src);
    return;
  }
  if (!(dst.shape == src.shape)) throw Error(ErrorCode::kFormat, "batch files disagree on shape");
  dst.pixels.insert(dst.pixels.end(), src.pixels.begin(), src.pixels.end());
  dst.labels.insert(dst.labels.end(), src.labels.begin(), src.labels.end());
  dst.num_labels = std::max(dst.num_labels, src.num_labels);
}

DatasetSplit load_cifar_files(const std::vector<fs::path>& files, int label_bytes) {
  DatasetSplit out;
  for (const auto& f : files) {
    const auto bytes = read_file(f);
    try {
      append(out, parse_cifar(bytes, label_bytes));
    } catch (const FormatError& e) {
      throw Error(ErrorCode::kFormat, f.filename().string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::pair<DatasetSplit, DatasetSplit> load_dataset(const fs::path& dir, Format format,
                                                   const LoadOptions& options) {
  if (!fs::is_directory(dir))
    throw Error(ErrorCode::kIo, "dataset directory not found: " + dir.string());
  DatasetSplit train, test;
  if (format == Format::kCifarBinary) {
    std::vector<fs::path> batches;
    const std::regex batch_re("data_batch_([0-9]+)\\.bin");
    for (const auto& entry : fs::directory_iterator(dir))
      if (std::regex_match(entry.path().filename().string(), batch_re))
        batches.push_back(entry.path());
    std::sort(batches.begin(), batches.end());
    if (!batches.empty()) {
      const int lb = options.label_bytes > 0 ? options.label_bytes : 1;
      train = load_cifar_files(batches, lb);
      test = load_cifar_files({dir / "test_batch.bin"}, lb);
    } else if (fs::exists(dir / "train.bin")) {
      const int lb = options.label_bytes > 0 ? options.label_bytes : 2;
      train = load_cifar_files({dir / "train.bin"}, lb);
      test = load_cifar_files({dir / "test.bin"}, lb);
    } else {
      throw Error(ErrorCode::kIo, "no CIFAR batch files in " + dir.string());
    }
  } else {
    train = parse_idx(read_file(dir / "train-images-idx3-ubyte"),
                      read_file(dir / "train-labels-idx1-ubyte"));
    test = parse_idx(read_file(dir / "t10k-images-idx3-ubyte"),
                     read_file(dir / "t10k-labels-idx1-ubyte"));
  }
  const int nl = options.num_labels > 0 ? options.num_labels
                                        : std::max(train.num_labels, test.num_labels);
  for (auto* split : {&train, &test}) {
    for (std::size_t i = 0; i < split->labels.size(); ++i)
      if (split->labels[i] >= nl)
        throw FormatError(i, "label " + std::to_string(split->labels[i]) +
                                 " exceeds num_labels at record");
    split->num_labels = nl;
  }
  train = train.head(options.train_limit);
  test = test.head(options.test_limit);
  train.normalize();
  test.normalize();
  return {std::move(train), std::move(test)};
}

void augment(std::span<float> batch, int n, const nn::Shape3& shape,
             const AugmentPolicy& policy, Rng& rng) {
  const int h = shape.height;
  const int w = shape.width;
  const std::size_t plane = shape.spatial();
  std::vector<float> tmp(plane);
  for (int s = 0; s < n; ++s) {
    const bool flip = policy.horizontal_flip && rng.bernoulli(0.5);
    const int m = policy.max_translate;
    const int dx = m > 0 ? rng.range(-m, m) : 0;
    const int dy = m > 0 ? rng.range(-m, m) : 0;
    if (!flip && dx == 0 && dy == 0) continue;
    for (int c = 0; c < shape.channels; ++c) {
      float* p = batch.data() + (static_cast<std::size_t>(s) * shape.channels + c) * plane;
      std::fill(tmp.begin(), tmp.end(), 0.0f);
      for (int y = 0; y < h; ++y) {
        const int sy = y - dy;
        if (sy < 0 || sy >= h) continue;
        for (int x = 0; x < w; ++x) {
          int sx = x - dx;
          if (sx < 0 || sx >= w) continue;
          if (flip) sx = w - 1 - sx;
          tmp[static_cast<std::size_t>(y) * w + x] = p[static_cast<std::size_t>(sy) * w + sx];
        }
      }
      std::copy(tmp.begin(), tmp.end(), p);
    }
  }
}

nn::Augment make_augmenter(const nn::Shape3& shape, const AugmentPolicy& policy) {
  return [shape, policy](std::span<float> batch, int n, Rng& rng) {
    augment(batch, n, shape, policy, rng);
  };
}

}  // namespace afcc::data
