// Copyright 2026 The offspan Authors
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

#ifndef OFFSPAN_OFFSPAN_H_
#define OFFSPAN_OFFSPAN_H_

/*
 * offspan C API.
 *
 * Every fallible call returns an osp_status; on failure a message for the
 * calling thread is available from osp_last_error() until the next call.
 * Strings returned through char** outputs are heap-allocated UTF-8 and must
 * be released with osp_string_free(). Structured results are JSON.
 * Character offsets are Unicode code-point indices.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(OFFSPAN_BUILDING_LIBRARY)
#define OSP_API __attribute__((visibility("default")))
#else
#define OSP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum osp_status {
  OSP_OK = 0,
  OSP_ERR_INVALID_ARGUMENT = 1,
  OSP_ERR_PARSE = 2,
  OSP_ERR_VALIDATION = 3,
  OSP_ERR_NOT_FOUND = 4,
  OSP_ERR_INTEGRITY = 5,
  OSP_ERR_IO = 6,
  OSP_ERR_RUNTIME = 7,
  OSP_ERR_UNAVAILABLE = 8
} osp_status;

typedef struct osp_dataset osp_dataset;
typedef struct osp_model osp_model;
typedef struct osp_registry osp_registry;
typedef struct osp_service osp_service;

/* Receives one JSON event per optimizer step / evaluation during training. */
typedef void (*osp_progress_fn)(const char* event_json, void* user_data);

OSP_API const char* osp_version(void);
OSP_API const char* osp_status_name(osp_status status);
OSP_API const char* osp_last_error(void);
OSP_API void osp_string_free(char* s);
/* "trace", "debug", "info", "warn", "error", "off". */
OSP_API osp_status osp_set_log_level(const char* level);

/* ---- datasets ---------------------------------------------------------- */

/* options_json (nullable): {"name", "language", "lenient",
 * "schema": {"id_column", "text_column", "label_column"}}.
 * .csv = span CSV, .tsv = post-level TSV, .jsonl = canonical JSON-lines. */
OSP_API osp_status osp_dataset_load(const char* path, const char* options_json,
                                    osp_dataset** out);
OSP_API void osp_dataset_free(osp_dataset* dataset);
OSP_API size_t osp_dataset_size(const osp_dataset* dataset);
/* {"name", "language", "granularity", "size"} */
OSP_API osp_status osp_dataset_info(const osp_dataset* dataset, char** json);
OSP_API osp_status osp_dataset_write_jsonl(const osp_dataset* dataset,
                                           const char* path);

/* ---- metrics ----------------------------------------------------------- */

/* Offsets as JSON integer arrays, e.g. "[12, 13, 14]". */
OSP_API osp_status osp_span_f1(const char* pred_json, const char* gold_json,
                               double* f1);
/* predictions_path: JSON-lines {"id", "spans": [offsets]} (optionally
 * "label"). Span mode reports per-post and mean F1; post-level mode projects
 * spans to OFF/NOT (or uses "label") and reports macro F1. */
OSP_API osp_status osp_evaluate(const char* predictions_path,
                                const osp_dataset* gold, int post_level,
                                char** report_json);

/* ---- lexicon baseline -------------------------------------------------- */

/* Writes JSON-lines predictions for every post of the dataset. */
OSP_API osp_status osp_lexicon_predict(const char* const* lexicon_paths,
                                       size_t n_paths,
                                       const osp_dataset* dataset,
                                       const char* out_path);

/* ---- checkpoints and training ------------------------------------------ */

/* Bootstraps a base checkpoint: vocabulary learned from the dataset texts,
 * random weights. arch_json: {"preset": "tiny"|"small"|"base"|"large",
 * "vocab_size", "max_positions", "lower_case", "seed", ...}. */
OSP_API osp_status osp_checkpoint_init(const osp_dataset* corpus,
                                       const char* id, const char* arch_json,
                                       const char* out_dir);

/* Masked-LM adaptation on the dataset texts followed by one token-tagger
 * run per configured seed. Writes seed-<n>/ model directories, an
 * ensemble.json manifest and validation_report.json into out_dir.
 * config_json (nullable) overrides training hyperparameters;
 * "skip_mlm": true skips the adaptation phase. */
OSP_API osp_status osp_train(const osp_dataset* dataset,
                             const char* base_checkpoint_dir,
                             const char* config_json, const char* out_dir,
                             osp_progress_fn progress, void* user_data,
                             char** report_json);

/* ---- models ------------------------------------------------------------ */

/* config_path (nullable): JSON {"cache_dir", "manifest", "offline"}. */
OSP_API osp_status osp_registry_open(const char* config_path,
                                     osp_registry** out);
OSP_API void osp_registry_free(osp_registry* registry);
/* JSON array of model cards with an "available" flag. */
OSP_API osp_status osp_registry_list(osp_registry* registry, char** json);
OSP_API osp_status osp_registry_register(osp_registry* registry,
                                         const char* name,
                                         const char* artifact_path,
                                         char** card_json);

/* A registered name, or a local model / ensemble directory or bundle. */
OSP_API osp_status osp_model_resolve(osp_registry* registry,
                                     const char* name_or_path,
                                     osp_model** out);
OSP_API osp_status osp_model_load(const char* dir, osp_model** out);
OSP_API void osp_model_free(osp_model* model);
OSP_API size_t osp_model_members(const osp_model* model);

/* {"offsets": [...], "spans": [[start, end), ...]} */
OSP_API osp_status osp_model_predict(const osp_model* model, const char* text,
                                     int merge_adjacent, char** result_json);
/* Streams JSON-lines {"id", "spans", "ranges"} for each post. */
OSP_API osp_status osp_model_predict_dataset(const osp_model* model,
                                             const osp_dataset* dataset,
                                             int merge_adjacent,
                                             const char* out_path);
/* Post-level macro-F1 report for a post-level dataset. */
OSP_API osp_status osp_model_evaluate_posts(const osp_model* model,
                                            const osp_dataset* dataset,
                                            const char* model_name,
                                            char** report_json);
/* Times one predict call per text over the first n texts of the dataset,
 * cycling when it is shorter; a null dataset uses built-in samples.
 * device: "cpu" or "accel". The result JSON carries a "table" string
 * shaped model x device -> seconds per 100 texts. */
OSP_API osp_status osp_model_bench(const osp_model* model,
                                   const osp_dataset* dataset, size_t n,
                                   size_t warmup, const char* model_name,
                                   const char* device, char** result_json);

/* Renders offensive spans inline: [[...]] markers, or ANSI red when
 * color is non-zero. spans_json is an offsets array. */
OSP_API osp_status osp_highlight(const char* text, const char* spans_json,
                                 int color, char** out);

/* ---- bundles ----------------------------------------------------------- */

OSP_API osp_status osp_bundle_pack(const char* dir, const char* bundle_path,
                                   char** sha256_hex);
OSP_API osp_status osp_bundle_unpack(const char* bundle_path, const char* dir);
OSP_API osp_status osp_sha256_file(const char* path, char** sha256_hex);

/* ---- service ----------------------------------------------------------- */

/* config_path (nullable) is a service config file; overrides_json
 * (nullable) replaces individual fields: {"host", "port", "datasets":
 * {name: path}, "static_dir", "model_cache_size", ...}. The registry must
 * outlive the service. */
OSP_API osp_status osp_service_create(osp_registry* registry,
                                      const char* config_path,
                                      const char* overrides_json,
                                      osp_service** out);
OSP_API osp_status osp_service_bind(osp_service* service, int* port);
/* Blocks until osp_service_stop(). */
OSP_API osp_status osp_service_serve(osp_service* service);
OSP_API void osp_service_stop(osp_service* service);
OSP_API void osp_service_free(osp_service* service);

#ifdef __cplusplus
}  /* extern "C" */
#endif

#endif  /* OFFSPAN_OFFSPAN_H_ */
