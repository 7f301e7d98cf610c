// Copyright 2026 The W2N Lab Authors. All Rights Reserved.
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

/* C interface to the w2n library. Every handle is opaque; every call returns
 * a status code and, on failure, sets a thread-local message readable with
 * w2n_last_error(). */
#ifndef W2N_W2N_H_
#define W2N_W2N_H_

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(W2N_BUILDING_CAPI)
#define W2N_API __attribute__((visibility("default")))
#else
#define W2N_API
#endif

typedef enum w2n_status {
  W2N_OK = 0,
  W2N_ERR_INVALID_ARGUMENT = 1,
  W2N_ERR_INFEASIBLE_CONFIG = 2,
  W2N_ERR_DIMENSION_MISMATCH = 3,
  W2N_ERR_DIVERGENCE = 4,
  W2N_ERR_IO = 5,
  W2N_ERR_PARSE = 6,
  W2N_ERR_MISSING_GROUND_TRUTH = 7,
  W2N_ERR_INTERNAL = 8
} w2n_status;

typedef struct w2n_config w2n_config;
typedef struct w2n_world w2n_world;
typedef struct w2n_result w2n_result;

typedef struct w2n_report {
  int t;
  double mean_iou;
  double map;
  double corloc;
  double labeled_fraction;
} w2n_report;

W2N_API const char* w2n_version(void);
W2N_API const char* w2n_last_error(void);
W2N_API const char* w2n_status_name(w2n_status status);

/* 0 debug, 1 info, 2 warning, 3 error, 4 off. */
W2N_API w2n_status w2n_set_log_level(int level);

W2N_API w2n_status w2n_config_new(w2n_config** out);
W2N_API w2n_status w2n_config_load(const char* path, w2n_config** out);
W2N_API w2n_status w2n_config_clone(const w2n_config* cfg, w2n_config** out);
W2N_API w2n_status w2n_config_set(w2n_config* cfg, const char* key, const char* value);
/* "key=value" */
W2N_API w2n_status w2n_config_apply(w2n_config* cfg, const char* assignment);
/* Copies the value into buf (NUL-terminated) when it fits; *needed receives
 * the length without the terminator. */
W2N_API w2n_status w2n_config_get(const w2n_config* cfg, const char* key, char* buf,
                                  size_t capacity, size_t* needed);
W2N_API w2n_status w2n_config_save(const w2n_config* cfg, const char* path);
W2N_API w2n_status w2n_config_validate(const w2n_config* cfg);
W2N_API void w2n_config_free(w2n_config* cfg);

W2N_API w2n_status w2n_world_generate(const w2n_config* cfg, int threads, w2n_world** out);
/* The held-out world used for toy mAP. */
W2N_API w2n_status w2n_test_world_generate(const w2n_config* cfg, int threads, w2n_world** out);
W2N_API w2n_status w2n_world_load(const char* path, w2n_world** out);
W2N_API w2n_status w2n_world_save(const w2n_world* world, const char* path);
W2N_API w2n_status w2n_world_image_count(const w2n_world* world, size_t* out);
W2N_API void w2n_world_free(w2n_world* world);

/* Full loop. The result keeps per-iteration reports and artifacts. */
W2N_API w2n_status w2n_run(const w2n_config* cfg, int threads, w2n_result** out);
W2N_API w2n_status w2n_result_report_count(const w2n_result* result, size_t* out);
W2N_API w2n_status w2n_result_report(const w2n_result* result, size_t row, w2n_report* out);
/* Writes report.csv, summary.txt, per-iteration pseudo labels, params, split
 * audits and SSOD logs, plus the final params, under out_dir. */
W2N_API w2n_status w2n_result_write(const w2n_result* result, const w2n_config* cfg,
                                    const char* out_dir);
W2N_API void w2n_result_free(w2n_result* result);

/* Paired curve runs on the initial pseudo labels. */
W2N_API w2n_status w2n_iou_curves(const w2n_config* cfg, int threads, const char* csv_path);
/* Localization adaptation on the initial pseudo labels, refinement, then the
 * configured split; writes the audit table. */
W2N_API w2n_status w2n_split_audit(const w2n_config* cfg, int threads, const char* csv_path);
/* Evaluates saved params on the configured worlds. pseudo_path may be NULL,
 * in which case mean_iou is reported as 0. */
W2N_API w2n_status w2n_eval(const w2n_config* cfg, const char* params_path,
                            const char* pseudo_path, int threads, w2n_report* out);

W2N_API w2n_status w2n_write_report_csv(const w2n_report* rows, size_t count,
                                        const char* path);

#ifdef __cplusplus
}
#endif

#endif  // W2N_W2N_H_
