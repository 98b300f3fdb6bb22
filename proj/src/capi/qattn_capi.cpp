// Copyright 2026 The qattn Authors
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
#include "qattn.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "qattn/data.hpp"
#include "qattn/error.hpp"
#include "qattn/model.hpp"
#include "qattn/selftest.hpp"
#include "qattn/smiles.hpp"
#include "qattn/train.hpp"

struct qattn_dataset {
    qattn::data::Dataset ds;
};

struct qattn_model {
    qattn::model::Model model;
};

namespace {

thread_local std::string g_last_error;

qattn_status fail(qattn_status s, std::string message) {
    g_last_error = std::move(message);
    return s;
}

/// Runs `fn`, mapping exceptions to status codes. Every entry point that can
/// throw goes through here so no exception crosses the C boundary.
template <typename Fn> qattn_status guarded(Fn &&fn) {
    g_last_error.clear();
    try {
        fn();
        return QATTN_OK;
    } catch (const qattn::DataError &e) {
        return fail(QATTN_E_DATA, e.what());
    } catch (const qattn::ValidationError &e) {
        return fail(QATTN_E_USAGE, e.what());
    } catch (const qattn::ResourceError &e) {
        return fail(QATTN_E_USAGE, e.what());
    } catch (const std::exception &e) {
        return fail(QATTN_E_INVARIANT, e.what());
    } catch (...) {
        return fail(QATTN_E_INVARIANT, "unknown error");
    }
}

#define QATTN_NONNULL(p)                                                                           \
    do {                                                                                           \
        if ((p) == nullptr) {                                                                      \
            return fail(QATTN_E_USAGE, #p " must not be NULL");                                    \
        }                                                                                          \
    } while (0)

char *dup_string(const std::string &s) {
    auto *out = static_cast<char *>(std::malloc(s.size() + 1));
    if (out == nullptr) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

qattn::data::Split to_split(qattn_split s) {
    if (s != QATTN_SPLIT_TRAIN && s != QATTN_SPLIT_VAL) {
        throw qattn::ValidationError("unknown split");
    }
    return s == QATTN_SPLIT_TRAIN ? qattn::data::Split::Train : qattn::data::Split::Val;
}

qattn::model::PropertyVector to_props(const double *p) {
    qattn::model::PropertyVector v{};
    std::copy(p, p + QATTN_NUM_PROPERTIES, v.begin());
    return v;
}

/// Properties pointer for a model: required iff conditioned.
const qattn::model::PropertyVector *props_for(const qattn::model::Model &m, const double *raw,
                                              qattn::model::PropertyVector &storage) {
    if (!m.config().conditioned) {
        return nullptr;
    }
    if (raw == nullptr) {
        throw qattn::ValidationError("conditioned model needs a property vector");
    }
    storage = to_props(raw);
    return &storage;
}

qattn::model::ModelConfig to_config(const qattn_model_config &c) {
    if (c.variant < QATTN_VARIANT_QUANTUM || c.variant > QATTN_VARIANT_CLASSICAL) {
        throw qattn::ValidationError("unknown variant");
    }
    qattn::model::ModelConfig m;
    m.variant = static_cast<qattn::model::Variant>(c.variant);
    m.conditioned = c.conditioned != 0;
    m.working_qubits = c.working_qubits;
    m.max_seq_len = c.max_seq_len;
    m.d_value = c.d_value;
    m.seed = c.seed;
    return m;
}

void copy_name(char *dst, std::size_t cap, const std::string &s) {
    const std::size_t n = std::min(cap - 1, s.size());
    std::memcpy(dst, s.data(), n);
    dst[n] = '\0';
}

} // namespace

extern "C" {

const char *qattn_version(void) { return "1.0.0"; }

const char *qattn_last_error(void) { return g_last_error.c_str(); }

void qattn_string_free(char *s) { std::free(s); }

const char *qattn_property_name(int property) {
    if (property < 0 || property >= QATTN_NUM_PROPERTIES) {
        return nullptr;
    }
    return qattn::smiles::kPropertyNames[static_cast<std::size_t>(property)].data();
}

qattn_status qattn_parse_variant(const char *name, qattn_variant *out) {
    QATTN_NONNULL(name);
    QATTN_NONNULL(out);
    return guarded([&] { *out = static_cast<qattn_variant>(qattn::model::parse_variant(name)); });
}

void qattn_set_log_level(int level) {
    spdlog::set_level(level <= 0   ? spdlog::level::info
                      : level == 1 ? spdlog::level::warn
                                   : spdlog::level::off);
}

// ---------------------------------------------------------------- Dataset

qattn_status qattn_dataset_load(const char *path, const qattn_ingest_options *options,
                                qattn_dataset **out) {
    QATTN_NONNULL(path);
    QATTN_NONNULL(out);
    *out = nullptr;
    return guarded([&] {
        qattn::data::IngestOptions o;
        if (options != nullptr) {
            o.seed = options->seed;
            if (options->max_records > 0) {
                o.max_records = options->max_records;
            }
        }
        auto h = std::make_unique<qattn_dataset>(qattn_dataset{qattn::data::ingest(path, o)});
        *out = h.release();
    });
}

void qattn_dataset_free(qattn_dataset *ds) { delete ds; }

qattn_status qattn_dataset_report(const qattn_dataset *ds, qattn_ingest_report *out) {
    QATTN_NONNULL(ds);
    QATTN_NONNULL(out);
    out->rows_read = ds->ds.report.rows_read;
    out->duplicates_dropped = ds->ds.report.duplicates_dropped;
    out->nonfinite_rejected = ds->ds.report.nonfinite_rejected;
    out->train = ds->ds.count(qattn::data::Split::Train);
    out->val = ds->ds.count(qattn::data::Split::Val);
    return QATTN_OK;
}

qattn_status qattn_dataset_stats(const qattn_dataset *ds,
                                 qattn_property_stats out[QATTN_NUM_PROPERTIES]) {
    QATTN_NONNULL(ds);
    QATTN_NONNULL(out);
    return guarded([&] {
        const auto stats = qattn::data::property_stats(ds->ds);
        for (std::size_t p = 0; p < stats.size(); ++p) {
            const auto &s = stats[p];
            out[p] = {s.mean, s.median, s.mode, s.stddev, s.q1, s.q3, s.iqr, s.min, s.max};
        }
    });
}

qattn_status qattn_dataset_write_stats(const qattn_dataset *ds, const char *path) {
    QATTN_NONNULL(ds);
    QATTN_NONNULL(path);
    return guarded([&] {
        std::ofstream f(path);
        if (!f) {
            throw qattn::DataError(std::string("cannot write ") + path);
        }
        qattn::data::write_stats(f, qattn::data::property_stats(ds->ds));
    });
}

qattn_status qattn_dataset_write_split(const qattn_dataset *ds, const char *path) {
    QATTN_NONNULL(ds);
    QATTN_NONNULL(path);
    return guarded([&] {
        std::ofstream f(path);
        if (!f) {
            throw qattn::DataError(std::string("cannot write ") + path);
        }
        qattn::data::write_split_manifest(f, ds->ds);
    });
}

qattn_status qattn_knn_impute(const qattn_dataset *ds, int property, double target, size_t k,
                              double out[QATTN_NUM_PROPERTIES]) {
    QATTN_NONNULL(ds);
    QATTN_NONNULL(out);
    if (property < 0 || property >= QATTN_NUM_PROPERTIES) {
        return fail(QATTN_E_USAGE, "property index out of range");
    }
    return guarded([&] {
        const auto v = qattn::data::knn_impute(
            ds->ds, static_cast<qattn::smiles::Property>(property), target, k);
        std::copy(v.begin(), v.end(), out);
    });
}

size_t qattn_dataset_size(const qattn_dataset *ds) {
    return ds == nullptr ? 0 : ds->ds.records.size();
}

qattn_status qattn_dataset_record(const qattn_dataset *ds, size_t index, const char **smiles,
                                  qattn_split *split, double props[QATTN_NUM_PROPERTIES]) {
    QATTN_NONNULL(ds);
    if (index >= ds->ds.records.size()) {
        return fail(QATTN_E_USAGE, "record index out of range");
    }
    const auto &r = ds->ds.records[index];
    if (smiles != nullptr) {
        *smiles = r.smiles.c_str();
    }
    if (split != nullptr) {
        *split = ds->ds.split[index] == qattn::data::Split::Train ? QATTN_SPLIT_TRAIN
                                                                  : QATTN_SPLIT_VAL;
    }
    if (props != nullptr) {
        std::copy(r.props.begin(), r.props.end(), props);
    }
    return QATTN_OK;
}

// ------------------------------------------------------------------ Model

void qattn_model_config_default(qattn_model_config *config) {
    if (config == nullptr) {
        return;
    }
    const qattn::model::ModelConfig d;
    config->variant = QATTN_VARIANT_QUANTUM;
    config->conditioned = 0;
    config->working_qubits = d.working_qubits;
    config->max_seq_len = d.max_seq_len;
    config->d_value = d.d_value;
    config->seed = d.seed;
}

qattn_status qattn_model_create(const qattn_model_config *config, qattn_model **out) {
    QATTN_NONNULL(config);
    QATTN_NONNULL(out);
    *out = nullptr;
    return guarded([&] {
        auto h = std::make_unique<qattn_model>(
            qattn_model{qattn::model::Model(to_config(*config), qattn::smiles::Vocabulary::qm9())});
        *out = h.release();
    });
}

qattn_status qattn_model_load(const char *path, qattn_model **out) {
    QATTN_NONNULL(path);
    QATTN_NONNULL(out);
    *out = nullptr;
    return guarded([&] {
        auto h = std::make_unique<qattn_model>(qattn_model{qattn::model::Model::load(path)});
        *out = h.release();
    });
}

qattn_status qattn_model_save(const qattn_model *model, const char *path) {
    QATTN_NONNULL(model);
    QATTN_NONNULL(path);
    return guarded([&] { model->model.save(path); });
}

void qattn_model_free(qattn_model *model) { delete model; }

qattn_status qattn_model_get_config(const qattn_model *model, qattn_model_config *out) {
    QATTN_NONNULL(model);
    QATTN_NONNULL(out);
    const auto &c = model->model.config();
    out->variant = static_cast<qattn_variant>(c.variant);
    out->conditioned = c.conditioned ? 1 : 0;
    out->working_qubits = c.working_qubits;
    out->max_seq_len = c.max_seq_len;
    out->d_value = c.d_value;
    out->seed = c.seed;
    return QATTN_OK;
}

size_t qattn_model_parameter_count(const qattn_model *model) {
    return model == nullptr ? 0 : model->model.count_parameters().total;
}

qattn_status qattn_model_evaluate(const qattn_model *model, const qattn_dataset *ds,
                                  qattn_split split, size_t threads, double *loss,
                                  double *accuracy) {
    QATTN_NONNULL(model);
    QATTN_NONNULL(ds);
    return guarded([&] {
        const auto idx = ds->ds.indices(to_split(split));
        if (idx.empty()) {
            throw qattn::DataError("split is empty");
        }
        const auto ex = qattn::train::make_examples(model->model, ds->ds, idx);
        const auto r = qattn::train::evaluate(model->model, ex, std::max<size_t>(1, threads));
        if (loss != nullptr) {
            *loss = r.loss;
        }
        if (accuracy != nullptr) {
            *accuracy = r.accuracy;
        }
    });
}

qattn_status qattn_model_attention(const qattn_model *model, const char *smiles,
                                   const double *properties, double *weights, size_t capacity,
                                   size_t *n_out, char **labels) {
    QATTN_NONNULL(model);
    QATTN_NONNULL(smiles);
    QATTN_NONNULL(n_out);
    return guarded([&] {
        const auto &m = model->model;
        std::vector<int> ids{qattn::smiles::Vocabulary::kSos};
        for (int id : m.vocab().tokenize(smiles)) {
            ids.push_back(id);
        }
        qattn::model::PropertyVector storage{};
        const auto out = m.forward_sequence(ids, props_for(m, properties, storage));
        const std::size_t n = ids.size();
        *n_out = n;
        if (weights != nullptr && capacity >= n * n) {
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    weights[i * n + j] = out.attention.weights(static_cast<Eigen::Index>(i),
                                                               static_cast<Eigen::Index>(j));
                }
            }
        }
        if (labels != nullptr) {
            std::string s;
            for (int id : ids) {
                s += m.vocab().token(id);
                s += '\n';
            }
            *labels = dup_string(s);
        }
    });
}

qattn_status qattn_model_generate(const qattn_model *model, const double *properties,
                                  const qattn_generate_options *options, uint64_t index,
                                  char **out) {
    QATTN_NONNULL(model);
    QATTN_NONNULL(options);
    QATTN_NONNULL(out);
    *out = nullptr;
    return guarded([&] {
        const auto &m = model->model;
        qattn::model::PropertyVector storage{};
        const auto *props = props_for(m, properties, storage);
        qattn::model::GenerateOptions o;
        o.max_len = options->max_len;
        o.temperature = options->temperature;
        o.seed = options->seed;
        const auto ids = qattn::model::generate(m, props, o, index);
        *out = dup_string(qattn::model::decode_lenient(m.vocab(), ids));
    });
}

// --------------------------------------------------------------- Training

void qattn_train_config_default(qattn_train_config *config) {
    if (config == nullptr) {
        return;
    }
    const qattn::train::TrainConfig d;
    config->epochs = d.epochs;
    config->batch_size = d.batch_size;
    config->lr = d.optimizer.lr;
    config->weight_decay = d.optimizer.weight_decay;
    config->clip_norm = d.optimizer.clip_norm;
    config->spsa_epsilon = d.spsa_epsilon;
    config->seed = d.seed;
    config->threads = d.threads;
}

qattn_status qattn_train(qattn_model *model, const qattn_dataset *ds,
                         const qattn_train_config *config, const char *out_dir,
                         qattn_epoch_callback callback, void *user, qattn_train_summary *summary) {
    QATTN_NONNULL(model);
    QATTN_NONNULL(ds);
    QATTN_NONNULL(config);
    return guarded([&] {
        qattn::train::TrainConfig c;
        c.epochs = config->epochs;
        c.batch_size = config->batch_size;
        c.optimizer.lr = config->lr;
        c.optimizer.weight_decay = config->weight_decay;
        c.optimizer.clip_norm = config->clip_norm;
        c.spsa_epsilon = config->spsa_epsilon;
        c.seed = config->seed;
        c.threads = std::max<size_t>(1, config->threads);
        if (out_dir != nullptr) {
            c.output_dir = out_dir;
        }
        const auto r = qattn::train::fit(model->model, ds->ds, c);
        if (callback != nullptr) {
            for (const auto &h : r.history) {
                const double nan = std::numeric_limits<double>::quiet_NaN();
                const qattn_epoch_metrics em{h.train.loss, h.train.accuracy,
                                             h.val ? h.val->loss : nan,
                                             h.val ? h.val->accuracy : nan, h.seconds};
                callback(h.epoch, &em, user);
            }
        }
        if (summary != nullptr) {
            summary->epochs_run = r.history.size() - 1;
            summary->best_epoch = r.best_epoch;
            summary->optimizer_steps = r.optimizer_steps;
            summary->skipped_steps = r.skipped_steps;
        }
    });
}

// ----------------------------------------------------------------- SMILES

qattn_status qattn_smiles_check(const char *smiles, int *valid, char **reason) {
    QATTN_NONNULL(smiles);
    QATTN_NONNULL(valid);
    return guarded([&] {
        const auto v = qattn::smiles::check_validity(smiles);
        *valid = v.valid ? 1 : 0;
        if (reason != nullptr) {
            *reason = dup_string(v.reason);
        }
    });
}

qattn_status qattn_smiles_descriptors(const char *smiles, double out[6]) {
    QATTN_NONNULL(smiles);
    QATTN_NONNULL(out);
    return guarded([&] {
        const auto d = qattn::smiles::descriptors(std::string_view(smiles));
        out[0] = d.mw;
        out[1] = d.hba;
        out[2] = d.hbd;
        out[3] = d.n_rot;
        out[4] = d.n_ring;
        out[5] = d.n_het;
    });
}

qattn_status qattn_generation_metrics_compute(const char *const *generated, size_t n,
                                              const qattn_dataset *training,
                                              qattn_generation_metrics *out) {
    QATTN_NONNULL(out);
    if (n > 0 && generated == nullptr) {
        return fail(QATTN_E_USAGE, "generated must not be NULL");
    }
    return guarded([&] {
        std::vector<std::string> strings(generated, generated + n);
        std::unordered_set<std::string> train;
        if (training != nullptr) {
            for (std::size_t i : training->ds.indices(qattn::data::Split::Train)) {
                train.insert(training->ds.records[i].smiles);
            }
        }
        const auto m = qattn::smiles::generation_metrics(strings, train);
        *out = {m.total,      m.valid,      m.unique_valid,
                m.novel,      m.validity,   m.uniqueness,
                m.validity_x_uniqueness,    m.novelty,
                m.undefined_ratios ? 1 : 0};
    });
}

qattn_status qattn_generation_metrics_format(const qattn_generation_metrics *m, int csv,
                                             char **out) {
    QATTN_NONNULL(m);
    QATTN_NONNULL(out);
    return guarded([&] {
        qattn::smiles::GenerationMetrics g;
        g.total = m->total;
        g.valid = m->valid;
        g.unique_valid = m->unique_valid;
        g.novel = m->novel;
        g.validity = m->validity;
        g.uniqueness = m->uniqueness;
        g.validity_x_uniqueness = m->validity_x_uniqueness;
        g.novelty = m->novelty;
        g.undefined_ratios = m->undefined_ratios != 0;
        std::ostringstream s;
        if (csv != 0) {
            qattn::smiles::write_metrics_csv(s, g);
        } else {
            qattn::smiles::write_metrics_table(s, g);
        }
        *out = dup_string(s.str());
    });
}

// -------------------------------------------------------------- Self-test

qattn_status qattn_selftest(uint64_t seed, double score_perturbation,
                            qattn_selftest_suite suites[QATTN_SELFTEST_MAX_SUITES],
                            size_t *n_suites) {
    QATTN_NONNULL(suites);
    QATTN_NONNULL(n_suites);
    bool all_passed = true;
    const qattn_status s = guarded([&] {
        const auto results = qattn::selftest::run({seed, score_perturbation});
        *n_suites = std::min<std::size_t>(results.size(), QATTN_SELFTEST_MAX_SUITES);
        for (std::size_t k = 0; k < *n_suites; ++k) {
            auto &out = suites[k];
            copy_name(out.name, sizeof out.name, results[k].name);
            copy_name(out.first_failure, sizeof out.first_failure, results[k].first_failure);
            out.cases = results[k].cases;
            out.failures = results[k].failures;
            all_passed = all_passed && results[k].passed();
        }
    });
    if (s != QATTN_OK) {
        return s;
    }
    return all_passed ? QATTN_OK : fail(QATTN_E_INVARIANT, "self-test failed");
}

} // extern "C"
