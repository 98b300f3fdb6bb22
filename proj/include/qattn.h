/*
 * Copyright 2026 The qattn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef QATTN_H_
#define QATTN_H_

/*
 * C interface to the qattn decoder library.
 *
 * Every fallible call returns a qattn_status. On failure the message is
 * available from qattn_last_error() on the same thread until the next call.
 * Handles are opaque and owned by the caller; free them with the matching
 * *_free function. Strings returned through char ** are heap-allocated and
 * released with qattn_string_free.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define QATTN_API __declspec(dllexport)
#else
#define QATTN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as CLI exit codes. */
typedef enum qattn_status {
    QATTN_OK = 0,
    QATTN_E_USAGE = 1,     /* bad argument or configuration */
    QATTN_E_DATA = 2,      /* unreadable or malformed input, tokenization failure */
    QATTN_E_INVARIANT = 3, /* an internal check or self-test failed */
} qattn_status;

enum { QATTN_NUM_PROPERTIES = 9 };

typedef enum qattn_split { QATTN_SPLIT_TRAIN = 0, QATTN_SPLIT_VAL = 1 } qattn_split;

typedef enum qattn_variant {
    QATTN_VARIANT_QUANTUM = 0,
    QATTN_VARIANT_CLASSICAL_EQ = 1,
    QATTN_VARIANT_CLASSICAL = 2,
} qattn_variant;

typedef struct qattn_dataset qattn_dataset;
typedef struct qattn_model qattn_model;

QATTN_API const char *qattn_version(void);
QATTN_API const char *qattn_last_error(void);
QATTN_API void qattn_string_free(char *s);
/* Property column name for index 0..8 (MW, HBA, ..., Stereo); NULL otherwise. */
QATTN_API const char *qattn_property_name(int property);
/* "quantum", "classical-eq" or "classical". */
QATTN_API qattn_status qattn_parse_variant(const char *name, qattn_variant *out);
/* 0 selects "info"; 1 "warn"; 2 "off". */
QATTN_API void qattn_set_log_level(int level);

/* ---------------------------------------------------------------- Dataset */

typedef struct qattn_ingest_options {
    uint64_t seed;        /* split shuffle seed */
    uint64_t max_records; /* keep the first N unique rows; 0 keeps all */
} qattn_ingest_options;

typedef struct qattn_ingest_report {
    size_t rows_read;
    size_t duplicates_dropped;
    size_t nonfinite_rejected;
    size_t train;
    size_t val;
} qattn_ingest_report;

typedef struct qattn_property_stats {
    double mean, median, mode, stddev, q1, q3, iqr, min, max;
} qattn_property_stats;

QATTN_API qattn_status qattn_dataset_load(const char *path, const qattn_ingest_options *options,
                                          qattn_dataset **out);
QATTN_API void qattn_dataset_free(qattn_dataset *ds);
QATTN_API qattn_status qattn_dataset_report(const qattn_dataset *ds, qattn_ingest_report *out);
/* TRAIN-split statistics for all nine properties. */
QATTN_API qattn_status qattn_dataset_stats(const qattn_dataset *ds,
                                           qattn_property_stats out[QATTN_NUM_PROPERTIES]);
QATTN_API qattn_status qattn_dataset_write_stats(const qattn_dataset *ds, const char *path);
QATTN_API qattn_status qattn_dataset_write_split(const qattn_dataset *ds, const char *path);
/* Nine-vector with `property` fixed to `target`, the rest averaged over the
 * k nearest TRAIN records by that property. */
QATTN_API qattn_status qattn_knn_impute(const qattn_dataset *ds, int property, double target,
                                        size_t k, double out[QATTN_NUM_PROPERTIES]);
/* Record accessors in file order. */
QATTN_API size_t qattn_dataset_size(const qattn_dataset *ds);
QATTN_API qattn_status qattn_dataset_record(const qattn_dataset *ds, size_t index,
                                            const char **smiles, qattn_split *split,
                                            double props[QATTN_NUM_PROPERTIES]);

/* ------------------------------------------------------------------ Model */

typedef struct qattn_model_config {
    qattn_variant variant;
    int conditioned;
    size_t working_qubits;
    size_t max_seq_len; /* positions including SOS and EOS */
    size_t d_value;
    uint64_t seed;
} qattn_model_config;

QATTN_API void qattn_model_config_default(qattn_model_config *config);
/* Model over the built-in 33-token vocabulary. */
QATTN_API qattn_status qattn_model_create(const qattn_model_config *config, qattn_model **out);
QATTN_API qattn_status qattn_model_load(const char *path, qattn_model **out);
QATTN_API qattn_status qattn_model_save(const qattn_model *model, const char *path);
QATTN_API void qattn_model_free(qattn_model *model);
QATTN_API qattn_status qattn_model_get_config(const qattn_model *model, qattn_model_config *out);
QATTN_API size_t qattn_model_parameter_count(const qattn_model *model);

/* Token-level loss and argmax accuracy over one split. */
QATTN_API qattn_status qattn_model_evaluate(const qattn_model *model, const qattn_dataset *ds,
                                            qattn_split split, size_t threads, double *loss,
                                            double *accuracy);

/* Post-softmax attention of SOS + tokens. Writes the (n+1)^2 row-major weights
 * into `weights` when capacity allows and always sets *n_out to n+1. Token
 * labels are returned newline-separated in *labels (may be NULL). */
QATTN_API qattn_status qattn_model_attention(const qattn_model *model, const char *smiles,
                                             const double *properties, double *weights,
                                             size_t capacity, size_t *n_out, char **labels);

typedef struct qattn_generate_options {
    size_t max_len; /* 0: as long as the positional table allows */
    double temperature;
    uint64_t seed;
} qattn_generate_options;

/* Sample `index` of the (seed) stream as a string; special tokens are spelled
 * out so they never validate. */
QATTN_API qattn_status qattn_model_generate(const qattn_model *model, const double *properties,
                                            const qattn_generate_options *options, uint64_t index,
                                            char **out);

/* --------------------------------------------------------------- Training */

typedef struct qattn_train_config {
    size_t epochs;
    size_t batch_size;
    double lr;
    double weight_decay;
    double clip_norm;
    double spsa_epsilon;
    uint64_t seed;
    size_t threads;
} qattn_train_config;

typedef struct qattn_epoch_metrics {
    double train_loss;
    double train_accuracy;
    double val_loss; /* NaN when the validation split is empty */
    double val_accuracy;
    double seconds;
} qattn_epoch_metrics;

/* Receives every epoch as it completes; epoch 0 is the untrained model. */
typedef void (*qattn_epoch_callback)(size_t epoch, const qattn_epoch_metrics *metrics,
                                     void *user);

typedef struct qattn_train_summary {
    size_t epochs_run;
    size_t best_epoch;
    size_t optimizer_steps;
    size_t skipped_steps;
} qattn_train_summary;

QATTN_API void qattn_train_config_default(qattn_train_config *config);
/* Trains in place. With out_dir set, writes epoch_<k>.ckpt, metrics.csv,
 * timing.csv and summary.json there. */
QATTN_API qattn_status qattn_train(qattn_model *model, const qattn_dataset *ds,
                                   const qattn_train_config *config, const char *out_dir,
                                   qattn_epoch_callback callback, void *user,
                                   qattn_train_summary *summary);

/* ----------------------------------------------------------------- SMILES */

/* *valid is 1 or 0; *reason (may be NULL) names the first violated rule. */
QATTN_API qattn_status qattn_smiles_check(const char *smiles, int *valid, char **reason);

/* Native descriptors MW, HBA, HBD, nRot, nRing, nHet of a valid SMILES. */
QATTN_API qattn_status qattn_smiles_descriptors(const char *smiles, double out[6]);

typedef struct qattn_generation_metrics {
    size_t total;
    size_t valid;
    size_t unique_valid;
    size_t novel;
    double validity; /* percent */
    double uniqueness;
    double validity_x_uniqueness;
    double novelty;
    int undefined_ratios;
} qattn_generation_metrics;

/* Novelty is against the TRAIN split of `training` (may be NULL: nothing is
 * known, every unique valid string is novel). */
QATTN_API qattn_status qattn_generation_metrics_compute(const char *const *generated, size_t n,
                                                        const qattn_dataset *training,
                                                        qattn_generation_metrics *out);
/* Human-readable table or one-row CSV with header. */
QATTN_API qattn_status qattn_generation_metrics_format(const qattn_generation_metrics *m,
                                                       int csv, char **out);

/* -------------------------------------------------------------- Self-test */

typedef struct qattn_selftest_suite {
    char name[32];
    size_t cases;
    size_t failures;
    char first_failure[256];
} qattn_selftest_suite;

enum { QATTN_SELFTEST_MAX_SUITES = 8 };

/* Runs every suite. score_perturbation is a test hook added to simulated
 * scores; 0 for a real check. Returns QATTN_E_INVARIANT if any suite fails. */
QATTN_API qattn_status qattn_selftest(uint64_t seed, double score_perturbation,
                                      qattn_selftest_suite suites[QATTN_SELFTEST_MAX_SUITES],
                                      size_t *n_suites);

#ifdef __cplusplus
}
#endif

#endif /* QATTN_H_ */
