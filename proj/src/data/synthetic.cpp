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

#include "data/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace afcc::data {

namespace {

constexpr int kSide = 32;

struct Rgb {
  double r, g, b;
};

Rgb hsv(double hue_deg, double s, double v) {
  double h = std::fmod(hue_deg, 360.0);
  if (h < 0) h += 360.0;
  const double c = v * s;
  const double x = c * (1.0 - std::fabs(std::fmod(h / 60.0, 2.0) - 1.0));
  const double m = v - c;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h / 60.0) % 6) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  return {255.0 * (r + m), 255.0 * (g + m), 255.0 * (b + m)};
}

bool inside(int shape, double u, double v, double r) {
  const double d2 = u * u + v * v;
  switch (shape) {
    case 0:  // disk
      return d2 <= r * r;
    case 1:  // square
      return std::fabs(u) <= 0.8 * r && std::fabs(v) <= 0.8 * r;
    case 2: {  // triangle, vertices on the circle of radius r
      constexpr double kPi = std::numbers::pi;
      std::array<double, 3> ax{}, ay{};
      for (int k = 0; k < 3; ++k) {
        const double a = kPi / 2 + k * 2 * kPi / 3;
        ax[static_cast<std::size_t>(k)] = r * std::cos(a);
        ay[static_cast<std::size_t>(k)] = r * std::sin(a);
      }
      bool pos = false, neg = false;
      for (std::size_t k = 0; k < 3; ++k) {
        const std::size_t n = (k + 1) % 3;
        const double cr = (ax[n] - ax[k]) * (v - ay[k]) - (ay[n] - ay[k]) * (u - ax[k]);
        pos = pos || cr > 0;
        neg = neg || cr < 0;
      }
      return !(pos && neg);
    }
    case 3:  // cross
      return (std::fabs(u) <= 0.3 * r && std::fabs(v) <= r) ||
             (std::fabs(v) <= 0.3 * r && std::fabs(u) <= r);
    default:  // ring
      return d2 <= r * r && d2 >= 0.3 * r * r;
  }
}

double gaussian(Rng& rng) {
  // Box-Muller on the portable uniform source.
  const double u1 = std::max(rng.uniform(), 1e-300);
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void draw_glyph(std::array<double, 3 * kSide * kSide>& img, int shape, double cx, double cy,
                double r, double theta, const Rgb& color) {
  const double ct = std::cos(theta), st = std::sin(theta);
  for (int y = 0; y < kSide; ++y) {
    for (int x = 0; x < kSide; ++x) {
      int hits = 0;
      for (int sy = 0; sy < 2; ++sy)
        for (int sx = 0; sx < 2; ++sx) {
          const double px = x + 0.25 + 0.5 * sx - cx;
          const double py = y + 0.25 + 0.5 * sy - cy;
          const double u = ct * px + st * py;
          const double v = -st * px + ct * py;
          hits += inside(shape, u, v, r) ? 1 : 0;
        }
      if (hits == 0) continue;
      const double a = hits / 4.0;
      const std::size_t p = static_cast<std::size_t>(y) * kSide + x;
      img[p] = (1 - a) * img[p] + a * color.r;
      img[kSide * kSide + p] = (1 - a) * img[kSide * kSide + p] + a * color.g;
      img[2 * kSide * kSide + p] = (1 - a) * img[2 * kSide * kSide + p] + a * color.b;
    }
  }
}

void render(const SyntheticOptions& o, int label, Rng& rng, std::uint8_t* out) {
  std::array<double, 3 * kSide * kSide> img{};
  // Background: random dull color with a linear ramp.
  const Rgb base = hsv(rng.uniform(0, 360), rng.uniform(0.0, 0.35), rng.uniform(0.2, 0.7));
  const double gx = rng.uniform(-2.0, 2.0), gy = rng.uniform(-2.0, 2.0);
  for (int y = 0; y < kSide; ++y)
    for (int x = 0; x < kSide; ++x) {
      const double ramp = gx * (x - 16) + gy * (y - 16);
      const std::size_t p = static_cast<std::size_t>(y) * kSide + x;
      img[p] = base.r + ramp;
      img[kSide * kSide + p] = base.g + ramp;
      img[2 * kSide * kSide + p] = base.b + ramp;
    }

  const int shape = label % 5;
  const int palette = label / 5;
  const double r = rng.uniform(o.min_radius, o.max_radius);
  const double cx = rng.uniform(r, kSide - r);
  const double cy = rng.uniform(r, kSide - r);
  const double theta = rng.uniform(0, 2 * std::numbers::pi);
  const double centre = palette == 0 ? 20.0 : 205.0;
  const Rgb color = hsv(centre + rng.uniform(-o.hue_spread, o.hue_spread),
                        rng.uniform(0.45, 1.0), rng.uniform(0.55, 1.0));

  // Distractors go underneath the target glyph.
  for (int d = 0; d < 2; ++d) {
    if (!rng.bernoulli(o.distractor_prob)) continue;
    const int ds = rng.range(0, 4);
    const double dr = rng.uniform(3.0, 5.0);
    draw_glyph(img, ds, rng.uniform(dr, kSide - dr), rng.uniform(dr, kSide - dr), dr,
               rng.uniform(0, 2 * std::numbers::pi),
               hsv(rng.uniform(0, 360), rng.uniform(0.3, 1.0), rng.uniform(0.4, 1.0)));
  }
  draw_glyph(img, shape, cx, cy, r, theta, color);

  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = img[i] + o.noise_sigma * gaussian(rng);
    out[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
}

DatasetSplit make_split(const SyntheticOptions& o, int n, std::uint64_t seed) {
  DatasetSplit split;
  split.shape = {3, kSide, kSide};
  split.num_labels = kSyntheticLabels;
  split.labels.resize(static_cast<std::size_t>(n));
  split.pixels.resize(static_cast<std::size_t>(n) * split.shape.size());
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    // Balanced classes in a shuffled order.
    split.labels[static_cast<std::size_t>(i)] = i % kSyntheticLabels;
  }
  rng.shuffle(split.labels.begin(), split.labels.end());
  for (int i = 0; i < n; ++i)
    render(o, split.labels[static_cast<std::size_t>(i)], rng,
           split.pixels.data() + static_cast<std::size_t>(i) * split.shape.size());
  split.normalize();
  return split;
}

}  // namespace

std::pair<DatasetSplit, DatasetSplit> make_synthetic(const SyntheticOptions& options) {
  return {make_split(options, options.train, Rng::mix(options.seed, 1)),
          make_split(options, options.test, Rng::mix(options.seed, 2))};
}

}  // namespace afcc::data
