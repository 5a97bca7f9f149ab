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

#include "metrics/filter_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "common/error.hpp"

namespace afcc::metrics {

std::size_t ClippedMatrix::ones() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

namespace {

void check_labels_present(const probe::FeatureSet& data, int num_labels) {
  std::vector<int> counts(static_cast<std::size_t>(num_labels), 0);
  for (int l : data.labels) {
    if (l < 0 || l >= num_labels)
      throw Error(ErrorCode::kInvalidArgument, "label " + std::to_string(l) + " out of range");
    ++counts[static_cast<std::size_t>(l)];
  }
  for (int l = 0; l < num_labels; ++l)
    if (counts[static_cast<std::size_t>(l)] == 0)
      throw Error(ErrorCode::kInvalidArgument,
                  "label " + std::to_string(l) + " has no records in the field set");
}

}  // namespace

std::vector<FieldMatrix> all_filter_fields(const probe::ProbeSpec& probe,
                                           const probe::FeatureSet& data) {
  if (data.dim != probe.feature_dim())
    throw ShapeError(probe.cut_layer, "feature dimension does not match the probe");
  const int nl = probe.num_labels;
  check_labels_present(data, nl);
  const int units = probe.num_units();
  const int pos = probe.positions_per_unit();
  const auto dim = static_cast<std::size_t>(probe.feature_dim());

  std::vector<FieldMatrix> out(static_cast<std::size_t>(units));
  for (auto& m : out) {
    m.labels = nl;
    m.values.assign(static_cast<std::size_t>(nl) * nl, 0.0);
  }
  std::vector<double> partial(static_cast<std::size_t>(nl));
  for (int s = 0; s < data.size(); ++s) {
    const float* x = data.features.data() + static_cast<std::size_t>(s) * dim;
    const int i = data.labels[static_cast<std::size_t>(s)];
    for (int u = 0; u < units; ++u) {
      const std::size_t base = static_cast<std::size_t>(u) * pos;
      for (int j = 0; j < nl; ++j) {
        const float* w = probe.readout.data() + static_cast<std::size_t>(j) * dim + base;
        double acc = 0.0;
        for (int p = 0; p < pos; ++p) acc += static_cast<double>(w[p]) * x[base + p];
        partial[static_cast<std::size_t>(j)] = acc;
      }
      auto& m = out[static_cast<std::size_t>(u)];
      for (int j = 0; j < nl; ++j) m.at(i, j) += partial[static_cast<std::size_t>(j)];
    }
  }
  return out;
}

FieldMatrix single_filter_fields(const probe::ProbeSpec& probe, int filter,
                                 const probe::FeatureSet& data) {
  if (filter < 0 || filter >= probe.num_units())
    throw Error(ErrorCode::kInvalidArgument, "filter " + std::to_string(filter) + " out of range");
  // Silence every readout weight except those fed by this filter.
  probe::ProbeSpec restricted = probe;
  const int pos = probe.positions_per_unit();
  const auto dim = static_cast<std::size_t>(probe.feature_dim());
  for (int j = 0; j < probe.num_labels; ++j)
    for (std::size_t k = 0; k < dim; ++k)
      if (static_cast<int>(k) / pos != filter)
        restricted.readout[static_cast<std::size_t>(j) * dim + k] = 0.0f;
  return full_probe_fields(restricted, data);
}

FieldMatrix full_probe_fields(const probe::ProbeSpec& probe, const probe::FeatureSet& data) {
  check_labels_present(data, probe.num_labels);
  const int nl = probe.num_labels;
  FieldMatrix m;
  m.labels = nl;
  m.values.assign(static_cast<std::size_t>(nl) * nl, 0.0);
  const auto dim = static_cast<std::size_t>(probe.feature_dim());
  for (int s = 0; s < data.size(); ++s) {
    const float* x = data.features.data() + static_cast<std::size_t>(s) * dim;
    const int i = data.labels[static_cast<std::size_t>(s)];
    for (int j = 0; j < nl; ++j) {
      const float* w = probe.readout.data() + static_cast<std::size_t>(j) * dim;
      double acc = 0.0;
      for (std::size_t k = 0; k < dim; ++k) acc += static_cast<double>(w[k]) * x[k];
      m.at(i, j) += acc;
    }
  }
  return m;
}

bool labels_imbalanced(std::span<const int> labels, int num_labels) {
  if (labels.empty() || num_labels <= 0) return false;
  std::vector<int> counts(static_cast<std::size_t>(num_labels), 0);
  for (int l : labels)
    if (l >= 0 && l < num_labels) ++counts[static_cast<std::size_t>(l)];
  const double mean = static_cast<double>(labels.size()) / num_labels;
  for (int c : counts)
    if (std::fabs(c - mean) > 0.05 * mean) return true;
  return false;
}

FieldMatrix normalize(const FieldMatrix& m) {
  FieldMatrix out = m;
  const double mx = *std::max_element(m.values.begin(), m.values.end());
  if (!(mx > 0.0) || !std::isfinite(mx)) {
    out.dead = true;
    return out;
  }
  for (auto& v : out.values) v /= mx;
  out.normalized = true;
  out.dead = false;
  return out;
}

ClippedMatrix clip(const FieldMatrix& m, double th) {
  require(th > 0.0 && th < 1.0, "threshold must lie in (0, 1)");
  ClippedMatrix c;
  c.labels = m.labels;
  c.threshold = th;
  c.bits.assign(m.values.size(), 0);
  for (int i = 0; i < m.labels; ++i)
    for (int j = 0; j < m.labels; ++j) {
      const double v = m.at(i, j);
      if (!m.dead && v >= th) c.bits[static_cast<std::size_t>(i) * m.labels + j] = 1;
      if (!m.dead && v <= -th) c.negative_extreme.emplace_back(i, j);
    }
  return c;
}

FilterProfile find_clusters(const ClippedMatrix& clipped, std::span<const int> order,
                            int filter_id) {
  const int n = clipped.labels;
  std::vector<int> visit;
  if (order.empty()) {
    visit.resize(static_cast<std::size_t>(n));
    std::iota(visit.begin(), visit.end(), 0);
  } else {
    require(static_cast<int>(order.size()) == n, "scan order must list every label once");
    visit.assign(order.begin(), order.end());
  }

  FilterProfile prof;
  prof.filter_id = filter_id;
  for (int j : visit) {
    if (!clipped.at(j, j)) continue;
    bool placed = false;
    for (auto& cl : prof.clusters) {
      const bool fits = std::all_of(cl.labels.begin(), cl.labels.end(), [&](int k) {
        return clipped.at(j, k) && clipped.at(k, j);
      });
      if (fits) {
        cl.labels.push_back(j);
        placed = true;
        break;
      }
    }
    if (!placed) prof.clusters.push_back(Cluster{{j}});
  }

  std::size_t inside = 0;
  for (const auto& cl : prof.clusters) {
    inside += static_cast<std::size_t>(cl.size()) * cl.size();
    prof.label_union.insert(prof.label_union.end(), cl.labels.begin(), cl.labels.end());
  }
  std::sort(prof.label_union.begin(), prof.label_union.end());
  prof.noise_count = static_cast<int>(clipped.ones() - inside);
  return prof;
}

ClippedMatrix permute(const ClippedMatrix& m, std::span<const int> perm) {
  const int n = m.labels;
  require(static_cast<int>(perm.size()) == n, "permutation size mismatch");
  const auto inv = invert_permutation(perm);
  ClippedMatrix out;
  out.labels = n;
  out.threshold = m.threshold;
  out.bits.resize(m.bits.size());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      out.bits[static_cast<std::size_t>(a) * n + b] =
          m.bits[static_cast<std::size_t>(perm[static_cast<std::size_t>(a)]) * n +
                 perm[static_cast<std::size_t>(b)]];
  for (auto [i, j] : m.negative_extreme)
    out.negative_extreme.emplace_back(inv[static_cast<std::size_t>(i)],
                                      inv[static_cast<std::size_t>(j)]);
  std::sort(out.negative_extreme.begin(), out.negative_extreme.end());
  return out;
}

std::vector<int> invert_permutation(std::span<const int> perm) {
  std::vector<int> inv(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) inv[static_cast<std::size_t>(perm[k])] = static_cast<int>(k);
  return inv;
}

std::pair<std::vector<int>, ClippedMatrix> permute_for_display(const ClippedMatrix& clipped,
                                                               const FilterProfile& profile) {
  // Each cluster is anchored at its smallest label; unclustered labels keep
  // their own index. A stable sort on (anchor, label) leaves already
  // contiguous clusters where they are.
  const int n = clipped.labels;
  std::vector<int> anchor(static_cast<std::size_t>(n));
  std::iota(anchor.begin(), anchor.end(), 0);
  for (const auto& cl : profile.clusters) {
    const int lo = *std::min_element(cl.labels.begin(), cl.labels.end());
    for (int l : cl.labels) anchor[static_cast<std::size_t>(l)] = lo;
  }
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
    const int ka = anchor[static_cast<std::size_t>(a)];
    const int kb = anchor[static_cast<std::size_t>(b)];
    return ka != kb ? ka < kb : a < b;
  });
  auto permuted = permute(clipped, perm);
  return {std::move(perm), std::move(permuted)};
}

LayerStats layer_stats(std::span<const FilterProfile> profiles) {
  LayerStats s;
  s.filters = static_cast<int>(profiles.size());
  if (profiles.empty()) return s;
  long clusters = 0, members = 0, noise = 0;
  for (const auto& p : profiles) {
    clusters += static_cast<long>(p.clusters.size());
    for (const auto& c : p.clusters) members += c.size();
    noise += p.noise_count;
  }
  s.n_c = static_cast<double>(clusters) / s.filters;
  s.c_s = clusters > 0 ? static_cast<double>(members) / clusters : 0.0;
  s.diagonal = s.n_c * s.c_s;
  s.noise = static_cast<double>(noise) / s.filters;
  return s;
}

std::vector<FilterProfile> profile_layer(std::span<const FieldMatrix> matrices, double th) {
  std::vector<FilterProfile> out;
  out.reserve(matrices.size());
  for (std::size_t f = 0; f < matrices.size(); ++f)
    out.push_back(find_clusters(clip(normalize(matrices[f]), th), {}, static_cast<int>(f)));
  return out;
}

std::string to_csv(const FieldMatrix& m) {
  std::ostringstream os;
  os.precision(9);
  for (int i = 0; i < m.labels; ++i) {
    for (int j = 0; j < m.labels; ++j) os << (j ? "," : "") << m.at(i, j);
    os << '\n';
  }
  return os.str();
}

std::string to_csv(const ClippedMatrix& m) {
  std::ostringstream os;
  for (int i = 0; i < m.labels; ++i) {
    for (int j = 0; j < m.labels; ++j) os << (j ? "," : "") << (m.at(i, j) ? 1 : 0);
    os << '\n';
  }
  return os.str();
}

std::vector<std::uint8_t> render_ppm(const ClippedMatrix& clipped, const FilterProfile& profile,
                                     int cell_pixels) {
  require(cell_pixels >= 1, "cell size must be positive");
  auto [perm, shown] = permute_for_display(clipped, profile);
  const int n = clipped.labels;
  const auto inv = invert_permutation(perm);
  // Cluster id per displayed position, -1 when unclustered.
  std::vector<int> cluster_of(static_cast<std::size_t>(n), -1);
  for (std::size_t c = 0; c < profile.clusters.size(); ++c)
    for (int l : profile.clusters[c].labels)
      cluster_of[static_cast<std::size_t>(inv[static_cast<std::size_t>(l)])] = static_cast<int>(c);
  std::vector<std::uint8_t> negative(static_cast<std::size_t>(n) * n, 0);
  for (auto [i, j] : shown.negative_extreme) negative[static_cast<std::size_t>(i) * n + j] = 1;

  const int side = n * cell_pixels;
  const std::string header = "P6\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
  std::vector<std::uint8_t> img(header.begin(), header.end());
  img.reserve(img.size() + static_cast<std::size_t>(side) * side * 3);
  for (int y = 0; y < side; ++y) {
    const int a = y / cell_pixels;
    for (int x = 0; x < side; ++x) {
      const int b = x / cell_pixels;
      std::uint8_t r = 0, g = 0, bl = 0;
      if (shown.at(a, b)) {
        const int ca = cluster_of[static_cast<std::size_t>(a)];
        if (ca >= 0 && ca == cluster_of[static_cast<std::size_t>(b)]) {
          r = g = bl = 255;
        } else {
          r = g = 255;
        }
      } else if (negative[static_cast<std::size_t>(a) * n + b]) {
        g = 200;
      }
      img.push_back(r);
      img.push_back(g);
      img.push_back(bl);
    }
  }
  return img;
}

}  // namespace afcc::metrics
