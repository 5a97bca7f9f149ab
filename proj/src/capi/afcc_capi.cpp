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

#include "afcc/afcc.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <filesystem>
#include <new>
#include <string>

#include "common/error.hpp"
#include "common/fs_util.hpp"
#include "data/dataset.hpp"
#include "data/synthetic.hpp"
#include "metrics/filter_metrics.hpp"
#include "pipeline/config.hpp"
#include "pipeline/experiment.hpp"
#include "pipeline/topology.hpp"
#include "pruning/pruning.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

struct afcc_experiment {
  json doc;
  fs::path base;
  std::optional<int> layer;
  afcc_log_fn log_fn = nullptr;
  void* log_user = nullptr;
  std::unique_ptr<afcc::pipeline::Experiment> exp;

  void rebuild() {
    auto next = std::make_unique<afcc::pipeline::Experiment>(
        afcc::pipeline::config_from_json(doc, base));
    exp = std::move(next);
    exp->set_layer(layer);
    if (log_fn) {
      auto fn = log_fn;
      auto user = log_user;
      exp->set_logger([fn, user](const std::string& m) { fn(m.c_str(), user); });
    }
  }
};

namespace {

thread_local std::string g_last_error;

template <class F>
afcc_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return AFCC_OK;
  } catch (const afcc::Error& e) {
    g_last_error = e.what();
    return static_cast<afcc_status>(e.code());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return AFCC_ERR_FORMAT;
  } catch (const fs::filesystem_error& e) {
    g_last_error = e.what();
    return AFCC_ERR_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return AFCC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return AFCC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return AFCC_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (p == nullptr) throw afcc::Error(afcc::ErrorCode::kInvalidArgument, std::string(name) + " is NULL");
}

void copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (buf && cap > 0) {
    const size_t n = std::min(cap - 1, s.size());
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
  }
}

}  // namespace

extern "C" {

const char* afcc_version(void) { return "1.0.0"; }

const char* afcc_status_name(afcc_status status) {
  switch (status) {
    case AFCC_OK: return "ok";
    case AFCC_ERR_INVALID_ARGUMENT: return "invalid argument";
    case AFCC_ERR_SHAPE_MISMATCH: return "shape mismatch";
    case AFCC_ERR_IO: return "i/o error";
    case AFCC_ERR_FORMAT: return "format error";
    case AFCC_ERR_NUMERIC: return "numeric error";
    case AFCC_ERR_PREREQUISITE: return "missing prerequisite";
    case AFCC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* afcc_last_error(void) { return g_last_error.c_str(); }

afcc_status afcc_experiment_open(const char* config_path, afcc_experiment** out) {
  return guarded([&] {
    need(config_path, "config_path");
    need(out, "out");
    *out = nullptr;
    auto h = std::make_unique<afcc_experiment>();
    try {
      h->doc = json::parse(afcc::read_text(config_path));
    } catch (const json::exception& e) {
      throw afcc::Error(afcc::ErrorCode::kFormat, std::string(config_path) + ": " + e.what());
    }
    h->base = fs::path(config_path).parent_path();
    h->rebuild();
    *out = h.release();
  });
}

afcc_status afcc_experiment_open_json(const char* config_json, afcc_experiment** out) {
  return guarded([&] {
    need(config_json, "config_json");
    need(out, "out");
    *out = nullptr;
    auto h = std::make_unique<afcc_experiment>();
    try {
      h->doc = json::parse(config_json);
    } catch (const json::exception& e) {
      throw afcc::Error(afcc::ErrorCode::kFormat, std::string("config: ") + e.what());
    }
    h->rebuild();
    *out = h.release();
  });
}

void afcc_experiment_close(afcc_experiment* exp) { delete exp; }

afcc_status afcc_experiment_set(afcc_experiment* exp, const char* key, const char* value) {
  return guarded([&] {
    need(exp, "exp");
    need(key, "key");
    need(value, "value");
    json trial = exp->doc;
    afcc::pipeline::apply_override(trial, std::string(key) + "=" + value);
    afcc::pipeline::config_from_json(trial, exp->base);  // validate before committing
    exp->doc = std::move(trial);
    exp->rebuild();
  });
}

afcc_status afcc_experiment_set_layer(afcc_experiment* exp, int layer) {
  return guarded([&] {
    need(exp, "exp");
    const auto next = layer < 0 ? std::nullopt : std::optional<int>(layer);
    if (next) afcc::pipeline::resolve_taps(exp->exp->config().architecture, {*next});
    exp->layer = next;
    exp->exp->set_layer(next);
  });
}

afcc_status afcc_experiment_set_logger(afcc_experiment* exp, afcc_log_fn fn, void* user) {
  return guarded([&] {
    need(exp, "exp");
    exp->log_fn = fn;
    exp->log_user = user;
    if (fn)
      exp->exp->set_logger([fn, user](const std::string& m) { fn(m.c_str(), user); });
    else
      exp->exp->set_logger(nullptr);
  });
}

afcc_status afcc_experiment_run(afcc_experiment* exp, const char* stage) {
  return guarded([&] {
    need(exp, "exp");
    need(stage, "stage");
    exp->exp->run(afcc::pipeline::stage_from_string(stage));
  });
}

afcc_status afcc_experiment_metric(const afcc_experiment* exp, const char* stage,
                                   const char* pointer, double* out) {
  return guarded([&] {
    need(exp, "exp");
    need(stage, "stage");
    need(pointer, "pointer");
    need(out, "out");
    try {
      *out = exp->exp->metric(afcc::pipeline::stage_from_string(stage), pointer);
    } catch (const json::exception& e) {
      throw afcc::Error(afcc::ErrorCode::kInvalidArgument, std::string("bad pointer: ") + e.what());
    }
  });
}

afcc_status afcc_experiment_summary(const afcc_experiment* exp, const char* stage, char* buf,
                                    size_t cap, size_t* needed) {
  return guarded([&] {
    need(exp, "exp");
    need(stage, "stage");
    copy_out(exp->exp->summary(afcc::pipeline::stage_from_string(stage)).dump(2), buf, cap, needed);
  });
}

afcc_status afcc_experiment_config(const afcc_experiment* exp, char* buf, size_t cap,
                                   size_t* needed) {
  return guarded([&] {
    need(exp, "exp");
    copy_out(afcc::pipeline::to_json(exp->exp->config()).dump(2), buf, cap, needed);
  });
}

afcc_status afcc_make_synthetic_dataset(const char* dir, int train_records, int test_records,
                                        uint64_t seed) {
  return guarded([&] {
    need(dir, "dir");
    afcc::require(train_records > 0 && test_records > 0, "record counts must be positive");
    afcc::data::SyntheticOptions opt;
    opt.train = train_records;
    opt.test = test_records;
    opt.seed = seed;
    const auto [train, test] = afcc::data::make_synthetic(opt);
    fs::create_directories(dir);
    afcc::write_file_atomic(fs::path(dir) / "data_batch_1.bin", afcc::data::encode_cifar(train, 1));
    afcc::write_file_atomic(fs::path(dir) / "test_batch.bin", afcc::data::encode_cifar(test, 1));
  });
}

afcc_status afcc_estimate_dilution(double d_prev, double d_next, int num_labels, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = afcc::pruning::estimate_dilution(d_prev, d_next, num_labels);
  });
}

afcc_status afcc_find_clusters(const double* field, int num_labels, double th, int* cluster_of,
                               int* num_clusters, int* noise) {
  return guarded([&] {
    need(field, "field");
    need(cluster_of, "cluster_of");
    afcc::require(num_labels > 0, "num_labels must be positive");
    afcc::metrics::FieldMatrix m;
    m.labels = num_labels;
    m.values.assign(field, field + static_cast<size_t>(num_labels) * num_labels);
    m.normalized = true;
    const auto profile = afcc::metrics::find_clusters(afcc::metrics::clip(m, th));
    std::fill(cluster_of, cluster_of + num_labels, -1);
    for (size_t c = 0; c < profile.clusters.size(); ++c)
      for (int l : profile.clusters[c].labels) cluster_of[l] = static_cast<int>(c);
    if (num_clusters) *num_clusters = static_cast<int>(profile.clusters.size());
    if (noise) *noise = profile.noise_count;
  });
}

}  // extern "C"
