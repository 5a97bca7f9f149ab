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

#include "nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "nn/blas.hpp"

namespace afcc::nn {

namespace {

template <class T>
void im2col(const T* in, const Shape3& is, const Conv2D& c, int oh, int ow, T* col) {
  const int p = oh * ow;
  for (int ch = 0; ch < is.channels; ++ch) {
    const T* plane = in + static_cast<std::size_t>(ch) * is.height * is.width;
    for (int ky = 0; ky < c.kernel_h; ++ky) {
      for (int kx = 0; kx < c.kernel_w; ++kx) {
        T* row = col + (static_cast<std::size_t>(ch * c.kernel_h + ky) * c.kernel_w + kx) * p;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * c.stride - c.pad + ky;
          T* dst = row + oy * ow;
          if (iy < 0 || iy >= is.height) {
            std::fill(dst, dst + ow, T{0});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * is.width;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * c.stride - c.pad + kx;
            dst[ox] = (ix >= 0 && ix < is.width) ? src[ix] : T{0};
          }
        }
      }
    }
  }
}

template <class T>
void col2im_add(const T* col, const Shape3& is, const Conv2D& c, int oh, int ow, T* in) {
  const int p = oh * ow;
  for (int ch = 0; ch < is.channels; ++ch) {
    T* plane = in + static_cast<std::size_t>(ch) * is.height * is.width;
    for (int ky = 0; ky < c.kernel_h; ++ky) {
      for (int kx = 0; kx < c.kernel_w; ++kx) {
        const T* row =
            col + (static_cast<std::size_t>(ch * c.kernel_h + ky) * c.kernel_w + kx) * p;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * c.stride - c.pad + ky;
          if (iy < 0 || iy >= is.height) continue;
          T* dst = plane + static_cast<std::size_t>(iy) * is.width;
          const T* src = row + oy * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * c.stride - c.pad + kx;
            if (ix >= 0 && ix < is.width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <class T>
Network<T>::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  shapes_ = spec_.output_shapes();
  params_.resize(spec_.layers.size());
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& layer = spec_.layers[i];
    if (const auto* c = std::get_if<Conv2D>(&layer)) {
      params_[i].weight.assign(c->weight_count(), T{0});
      if (c->has_bias) params_[i].bias.assign(static_cast<std::size_t>(c->out_channels), T{0});
    } else if (const auto* d = std::get_if<Dense>(&layer)) {
      params_[i].weight.assign(d->weight_count(), T{0});
      if (d->has_bias) params_[i].bias.assign(static_cast<std::size_t>(d->out_features), T{0});
    }
  }
}

template <class T>
void Network<T>::initialize(std::uint64_t seed) {
  Rng rng(seed);
  const int last = num_layers() - 1;
  for (int i = 0; i < num_layers(); ++i) {
    auto& p = params_[static_cast<std::size_t>(i)];
    if (p.empty()) continue;
    const std::size_t fan_out_units =
        std::holds_alternative<Conv2D>(spec_.layers[static_cast<std::size_t>(i)])
            ? static_cast<std::size_t>(std::get<Conv2D>(spec_.layers[static_cast<std::size_t>(i)]).out_channels)
            : static_cast<std::size_t>(std::get<Dense>(spec_.layers[static_cast<std::size_t>(i)]).out_features);
    const double fan_in = static_cast<double>(p.weight.size() / fan_out_units);
    const double bound = std::sqrt((i == last ? 1.0 : 6.0) / fan_in);
    for (auto& w : p.weight) w = static_cast<T>(rng.uniform(-bound, bound));
    std::fill(p.bias.begin(), p.bias.end(), T{0});
  }
  apply_masks();
}

template <class T>
std::vector<T> Network<T>::forward(std::span<const T> batch, int n, ForwardCache<T>* cache,
                                   int last) const {
  if (n <= 0) throw ShapeError(0, "empty batch");
  if (batch.size() != static_cast<std::size_t>(n) * spec_.input.size())
    throw ShapeError(0, "batch holds " + std::to_string(batch.size()) +
                            " values, expected " + std::to_string(n) + " x " +
                            std::to_string(spec_.input.size()));
  if (last < 0) last = num_layers() - 1;
  if (last >= num_layers()) throw ShapeError(last, "layer index out of range");

  if (cache != nullptr) {
    cache->batch = n;
    cache->acts.assign(static_cast<std::size_t>(last) + 2, {});
    cache->argmax.assign(static_cast<std::size_t>(last) + 1, {});
    cache->acts[0].assign(batch.begin(), batch.end());
  }

  std::vector<T> cur(batch.begin(), batch.end());
  std::vector<T> col;
  Shape3 is = spec_.input;
  for (int li = 0; li <= last; ++li) {
    const auto& layer = spec_.layers[static_cast<std::size_t>(li)];
    const Shape3 os = shapes_[static_cast<std::size_t>(li)];
    const auto& p = params_[static_cast<std::size_t>(li)];
    std::vector<T> next(static_cast<std::size_t>(n) * os.size());

    if (const auto* c = std::get_if<Conv2D>(&layer)) {
      const int k = c->in_channels * c->kernel_h * c->kernel_w;
      const int pix = os.height * os.width;
      col.resize(static_cast<std::size_t>(k) * pix);
      for (int s = 0; s < n; ++s) {
        im2col(cur.data() + static_cast<std::size_t>(s) * is.size(), is, *c, os.height,
               os.width, col.data());
        T* out = next.data() + static_cast<std::size_t>(s) * os.size();
        if (!p.bias.empty()) {
          for (int oc = 0; oc < os.channels; ++oc)
            std::fill(out + static_cast<std::size_t>(oc) * pix,
                      out + static_cast<std::size_t>(oc + 1) * pix, p.bias[static_cast<std::size_t>(oc)]);
        }
        blas::gemm(false, false, os.channels, pix, k, T{1}, p.weight.data(), k, col.data(),
                   pix, p.bias.empty() ? T{0} : T{1}, out, pix);
      }
    } else if (const auto* d = std::get_if<Dense>(&layer)) {
      if (!p.bias.empty())
        for (int s = 0; s < n; ++s)
          std::copy(p.bias.begin(), p.bias.end(),
                    next.begin() + static_cast<std::ptrdiff_t>(s) * d->out_features);
      blas::gemm(false, true, n, d->out_features, d->in_features, T{1}, cur.data(),
                 d->in_features, p.weight.data(), d->in_features,
                 p.bias.empty() ? T{0} : T{1}, next.data(), d->out_features);
    } else if (const auto* mp = std::get_if<MaxPool>(&layer)) {
      std::vector<std::int32_t> arg;
      if (cache != nullptr) arg.resize(next.size());
      for (int s = 0; s < n; ++s) {
        for (int ch = 0; ch < is.channels; ++ch) {
          const std::size_t ibase = (static_cast<std::size_t>(s) * is.channels + ch) * is.spatial();
          const std::size_t obase = (static_cast<std::size_t>(s) * os.channels + ch) * os.spatial();
          for (int oy = 0; oy < os.height; ++oy) {
            for (int ox = 0; ox < os.width; ++ox) {
              std::int32_t best = -1;
              T best_v = -std::numeric_limits<T>::infinity();
              for (int ky = 0; ky < mp->kernel; ++ky) {
                for (int kx = 0; kx < mp->kernel; ++kx) {
                  const int idx = (oy * mp->stride + ky) * is.width + ox * mp->stride + kx;
                  const T v = cur[ibase + static_cast<std::size_t>(idx)];
                  if (best < 0 || v > best_v) {
                    best = idx;
                    best_v = v;
                  }
                }
              }
              const std::size_t o = obase + static_cast<std::size_t>(oy) * os.width + ox;
              next[o] = best_v;
              if (cache != nullptr) arg[o] = best;
            }
          }
        }
      }
      if (cache != nullptr) cache->argmax[static_cast<std::size_t>(li)] = std::move(arg);
    } else if (std::holds_alternative<ReLU>(layer)) {
      for (std::size_t i = 0; i < next.size(); ++i) next[i] = cur[i] > T{0} ? cur[i] : T{0};
    } else {
      next = cur;  // Flatten: NCHW is already contiguous per sample
    }

    if (cache != nullptr) cache->acts[static_cast<std::size_t>(li) + 1] = next;
    cur = std::move(next);
    is = os;
  }
  return cur;
}

template <class T>
double mean_cross_entropy(std::span<const T> logits, std::span<const int> labels,
                          int num_labels) {
  const std::size_t n = labels.size();
  double total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const T* row = logits.data() + s * static_cast<std::size_t>(num_labels);
    double mx = row[0];
    for (int j = 1; j < num_labels; ++j) mx = std::max(mx, static_cast<double>(row[j]));
    double z = 0.0;
    for (int j = 0; j < num_labels; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
    total += std::log(z) + mx - static_cast<double>(row[labels[s]]);
  }
  return total / static_cast<double>(n);
}

template <class T>
int argmax_row(std::span<const T> row) {
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

template <class T>
Gradients<T> Network<T>::backward(const ForwardCache<T>& cache, std::span<const int> labels,
                                  const LayerSet& frozen) const {
  const int n = cache.batch;
  const int layers = num_layers();
  if (static_cast<int>(cache.acts.size()) != layers + 1)
    throw Error(ErrorCode::kInvalidArgument, "cache does not cover the full network");
  if (static_cast<int>(labels.size()) != n)
    throw Error(ErrorCode::kInvalidArgument, "label count does not match batch");
  const int nl = spec_.num_labels;
  for (int lab : labels)
    if (lab < 0 || lab >= nl)
      throw Error(ErrorCode::kInvalidArgument, "label " + std::to_string(lab) + " out of range");

  Gradients<T> g;
  g.weight.resize(static_cast<std::size_t>(layers));
  g.bias.resize(static_cast<std::size_t>(layers));

  // dL/dlogits = (softmax - onehot) / n
  const auto& logits = cache.acts.back();
  std::vector<T> grad(logits.size());
  double total = 0.0;
  for (int s = 0; s < n; ++s) {
    const T* row = logits.data() + static_cast<std::size_t>(s) * nl;
    double mx = row[0];
    for (int j = 1; j < nl; ++j) mx = std::max(mx, static_cast<double>(row[j]));
    double z = 0.0;
    for (int j = 0; j < nl; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
    const double lse = std::log(z) + mx;
    const double sample_loss = lse - static_cast<double>(row[labels[static_cast<std::size_t>(s)]]);
    if (!std::isfinite(sample_loss))
      throw NumericError(s, "non-finite loss at batch index " + std::to_string(s));
    total += sample_loss;
    for (int j = 0; j < nl; ++j) {
      double pj = std::exp(static_cast<double>(row[j]) - lse);
      if (j == labels[static_cast<std::size_t>(s)]) pj -= 1.0;
      grad[static_cast<std::size_t>(s) * nl + j] = static_cast<T>(pj / n);
    }
  }
  g.loss = total / n;

  std::vector<T> col, dcol;
  for (int li = layers - 1; li >= 0; --li) {
    const auto& layer = spec_.layers[static_cast<std::size_t>(li)];
    const auto& in = cache.acts[static_cast<std::size_t>(li)];
    const Shape3 is = li == 0 ? spec_.input : shapes_[static_cast<std::size_t>(li) - 1];
    const Shape3 os = shapes_[static_cast<std::size_t>(li)];
    const auto& p = params_[static_cast<std::size_t>(li)];
    const bool train_params = has_params(layer) && frozen.count(li) == 0;
    const bool need_input_grad = li > 0;
    std::vector<T> dprev;
    if (need_input_grad) dprev.assign(in.size(), T{0});

    if (const auto* c = std::get_if<Conv2D>(&layer)) {
      const int k = c->in_channels * c->kernel_h * c->kernel_w;
      const int pix = os.height * os.width;
      col.resize(static_cast<std::size_t>(k) * pix);
      dcol.resize(col.size());
      std::vector<T> dw, db;
      if (train_params) {
        dw.assign(p.weight.size(), T{0});
        if (!p.bias.empty()) db.assign(p.bias.size(), T{0});
      }
      for (int s = 0; s < n; ++s) {
        const T* dout = grad.data() + static_cast<std::size_t>(s) * os.size();
        if (train_params) {
          im2col(in.data() + static_cast<std::size_t>(s) * is.size(), is, *c, os.height,
                 os.width, col.data());
          blas::gemm(false, true, os.channels, k, pix, T{1}, dout, pix, col.data(), pix, T{1},
                     dw.data(), k);
          for (std::size_t oc = 0; oc < db.size(); ++oc) {
            double acc = 0.0;
            for (int q = 0; q < pix; ++q) acc += dout[oc * static_cast<std::size_t>(pix) + q];
            db[oc] += static_cast<T>(acc);
          }
        }
        if (need_input_grad) {
          blas::gemm(true, false, k, pix, os.channels, T{1}, p.weight.data(), k, dout, pix,
                     T{0}, dcol.data(), pix);
          col2im_add(dcol.data(), is, *c, os.height, os.width,
                     dprev.data() + static_cast<std::size_t>(s) * is.size());
        }
      }
      if (train_params) {
        g.weight[static_cast<std::size_t>(li)] = std::move(dw);
        g.bias[static_cast<std::size_t>(li)] = std::move(db);
      }
    } else if (const auto* d = std::get_if<Dense>(&layer)) {
      if (train_params) {
        std::vector<T> dw(p.weight.size());
        blas::gemm(true, false, d->out_features, d->in_features, n, T{1}, grad.data(),
                   d->out_features, in.data(), d->in_features, T{0}, dw.data(),
                   d->in_features);
        g.weight[static_cast<std::size_t>(li)] = std::move(dw);
        if (!p.bias.empty()) {
          std::vector<T> db(p.bias.size());
          for (int o = 0; o < d->out_features; ++o) {
            double acc = 0.0;
            for (int s = 0; s < n; ++s)
              acc += grad[static_cast<std::size_t>(s) * d->out_features + o];
            db[static_cast<std::size_t>(o)] = static_cast<T>(acc);
          }
          g.bias[static_cast<std::size_t>(li)] = std::move(db);
        }
      }
      if (need_input_grad)
        blas::gemm(false, false, n, d->in_features, d->out_features, T{1}, grad.data(),
                   d->out_features, p.weight.data(), d->in_features, T{0}, dprev.data(),
                   d->in_features);
    } else if (std::holds_alternative<MaxPool>(layer)) {
      if (need_input_grad) {
        const auto& arg = cache.argmax[static_cast<std::size_t>(li)];
        for (int s = 0; s < n; ++s)
          for (int ch = 0; ch < os.channels; ++ch) {
            const std::size_t ibase = (static_cast<std::size_t>(s) * is.channels + ch) * is.spatial();
            const std::size_t obase = (static_cast<std::size_t>(s) * os.channels + ch) * os.spatial();
            for (std::size_t q = 0; q < os.spatial(); ++q)
              dprev[ibase + static_cast<std::size_t>(arg[obase + q])] += grad[obase + q];
          }
      }
    } else if (std::holds_alternative<ReLU>(layer)) {
      if (need_input_grad)
        for (std::size_t i = 0; i < in.size(); ++i) dprev[i] = in[i] > T{0} ? grad[i] : T{0};
    } else if (need_input_grad) {
      dprev = grad;
    }

    if (train_params) {
      auto& dw = g.weight[static_cast<std::size_t>(li)];
      if (!p.weight_mask.empty())
        for (std::size_t i = 0; i < dw.size(); ++i)
          if (!p.weight_mask[i]) dw[i] = T{0};
      auto& db = g.bias[static_cast<std::size_t>(li)];
      if (!p.bias_mask.empty())
        for (std::size_t i = 0; i < db.size(); ++i)
          if (!p.bias_mask[i]) db[i] = T{0};
    }
    grad = std::move(dprev);
  }
  return g;
}

template <class T>
void Network<T>::install_mask(int layer, std::vector<std::uint8_t> weight_mask,
                              std::vector<std::uint8_t> bias_mask) {
  auto& p = params(layer);
  if (p.empty()) throw ShapeError(layer, "layer has no weights to mask");
  if (weight_mask.size() != p.weight.size())
    throw ShapeError(layer, "mask has " + std::to_string(weight_mask.size()) +
                                " entries, weights have " + std::to_string(p.weight.size()));
  if (!bias_mask.empty() && bias_mask.size() != p.bias.size())
    throw ShapeError(layer, "bias mask size mismatch");
  p.weight_mask = std::move(weight_mask);
  p.bias_mask = std::move(bias_mask);
  apply_masks();
}

template <class T>
void Network<T>::clear_mask(int layer) {
  auto& p = params(layer);
  p.weight_mask.clear();
  p.bias_mask.clear();
}

template <class T>
void Network<T>::apply_masks() {
  for (auto& p : params_) {
    for (std::size_t i = 0; i < p.weight_mask.size(); ++i)
      if (!p.weight_mask[i]) p.weight[i] = T{0};
    for (std::size_t i = 0; i < p.bias_mask.size(); ++i)
      if (!p.bias_mask[i]) p.bias[i] = T{0};
  }
}

template class Network<float>;
template class Network<double>;
template double mean_cross_entropy<float>(std::span<const float>, std::span<const int>, int);
template double mean_cross_entropy<double>(std::span<const double>, std::span<const int>, int);
template int argmax_row<float>(std::span<const float>);
template int argmax_row<double>(std::span<const double>);

}  // namespace afcc::nn
