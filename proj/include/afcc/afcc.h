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

#ifndef AFCC_AFCC_H_
#define AFCC_AFCC_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define AFCC_API __attribute__((visibility("default")))
#else
#define AFCC_API
#endif

typedef enum afcc_status {
  AFCC_OK = 0,
  AFCC_ERR_INVALID_ARGUMENT = 1,
  AFCC_ERR_SHAPE_MISMATCH = 2,
  AFCC_ERR_IO = 3,
  AFCC_ERR_FORMAT = 4,
  AFCC_ERR_NUMERIC = 5,
  AFCC_ERR_PREREQUISITE = 6,
  AFCC_ERR_INTERNAL = 7
} afcc_status;

typedef struct afcc_experiment afcc_experiment;

typedef void (*afcc_log_fn)(const char* message, void* user);

AFCC_API const char* afcc_version(void);
AFCC_API const char* afcc_status_name(afcc_status status);

/* Message of the last failed call on this thread ("" after success). */
AFCC_API const char* afcc_last_error(void);

/* Opens an experiment from a JSON config file. Relative paths inside the
   file resolve against the file's directory. */
AFCC_API afcc_status afcc_experiment_open(const char* config_path, afcc_experiment** out);

/* Same, from JSON text; relative paths resolve against the working
   directory. */
AFCC_API afcc_status afcc_experiment_open_json(const char* config_json, afcc_experiment** out);

AFCC_API void afcc_experiment_close(afcc_experiment* exp);

/* Overrides one config key. `key` is dotted ("prune.scheme"); `value` is
   JSON text, or a bare string. */
AFCC_API afcc_status afcc_experiment_set(afcc_experiment* exp, const char* key, const char* value);

/* Restricts probe/analyze/render to one cut layer; -1 restores all. */
AFCC_API afcc_status afcc_experiment_set_layer(afcc_experiment* exp, int layer);

AFCC_API afcc_status afcc_experiment_set_logger(afcc_experiment* exp, afcc_log_fn fn, void* user);

/* stage: train, probe, analyze, prune, finetune, report or render. */
AFCC_API afcc_status afcc_experiment_run(afcc_experiment* exp, const char* stage);

/* Numeric value at JSON pointer `pointer` of a stage's summary. */
AFCC_API afcc_status afcc_experiment_metric(const afcc_experiment* exp, const char* stage,
                                            const char* pointer, double* out);

/* Copies a stage summary (JSON) into buf; *needed gets the size including
   the terminator. A NULL or short buffer is filled as far as it goes. */
AFCC_API afcc_status afcc_experiment_summary(const afcc_experiment* exp, const char* stage,
                                             char* buf, size_t cap, size_t* needed);

/* The resolved config as JSON, same buffer contract. */
AFCC_API afcc_status afcc_experiment_config(const afcc_experiment* exp, char* buf, size_t cap,
                                            size_t* needed);

/* Writes the procedural 10-label dataset (CIFAR-10 binary layout:
   data_batch_1.bin and test_batch.bin) into `dir`. */
AFCC_API afcc_status afcc_make_synthetic_dataset(const char* dir, int train_records,
                                                 int test_records, uint64_t seed);

/* (1 - d_prev / L)^d_next */
AFCC_API afcc_status afcc_estimate_dilution(double d_prev, double d_next, int num_labels,
                                            double* out);

/* Clusters of one normalized L x L field matrix (row-major) at threshold
   th. cluster_of[l] gets the cluster index of label l or -1. */
AFCC_API afcc_status afcc_find_clusters(const double* field, int num_labels, double th,
                                        int* cluster_of, int* num_clusters, int* noise);

#ifdef __cplusplus
}
#endif

#endif /* AFCC_AFCC_H_ */
