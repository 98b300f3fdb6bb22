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

// Exercises the shared library through its C header only.

#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "qattn.h"

namespace {

namespace fs = std::filesystem;

const std::string kCorpus = std::string(QATTN_DATA_DIR) + "/qm9_like.csv";

qattn_dataset *load(std::uint64_t max_records, std::uint64_t seed = 2) {
    qattn_ingest_options o{seed, max_records};
    qattn_dataset *ds = nullptr;
    EXPECT_EQ(qattn_dataset_load(kCorpus.c_str(), &o, &ds), QATTN_OK) << qattn_last_error();
    return ds;
}

qattn_model *small_model(qattn_variant v, int conditioned) {
    qattn_model_config c{};
    qattn_model_config_default(&c);
    c.variant = v;
    c.conditioned = conditioned;
    c.working_qubits = conditioned != 0 ? 3 : 4;
    c.d_value = 8;
    c.max_seq_len = 24;
    c.seed = 4;
    qattn_model *m = nullptr;
    EXPECT_EQ(qattn_model_create(&c, &m), QATTN_OK) << qattn_last_error();
    return m;
}

std::string take(char *s) {
    std::string out(s);
    qattn_string_free(s);
    return out;
}

TEST(CApi, ErrorsMapToStatusCodes) {
    qattn_dataset *ds = nullptr;
    EXPECT_EQ(qattn_dataset_load("/no/such/file.csv", nullptr, &ds), QATTN_E_DATA);
    EXPECT_EQ(ds, nullptr);
    EXPECT_NE(std::string(qattn_last_error()), "");
    EXPECT_EQ(qattn_dataset_load(nullptr, nullptr, &ds), QATTN_E_USAGE);
    qattn_variant v{};
    EXPECT_EQ(qattn_parse_variant("hybrid", &v), QATTN_E_USAGE);
    EXPECT_EQ(qattn_parse_variant("classical-eq", &v), QATTN_OK);
    EXPECT_EQ(v, QATTN_VARIANT_CLASSICAL_EQ);
    qattn_model_config c{};
    qattn_model_config_default(&c);
    c.working_qubits = 5; // not divisible into two registers
    qattn_model *m = nullptr;
    EXPECT_EQ(qattn_model_create(&c, &m), QATTN_E_USAGE);
    EXPECT_EQ(qattn_model_load("/no/such.ckpt", &m), QATTN_E_DATA);
    EXPECT_STREQ(qattn_property_name(0), "MW");
    EXPECT_STREQ(qattn_property_name(8), "Stereo");
    EXPECT_EQ(qattn_property_name(9), nullptr);
}

TEST(CApi, DatasetReportAndStats) {
    qattn_dataset *ds = load(105);
    qattn_ingest_report rep{};
    ASSERT_EQ(qattn_dataset_report(ds, &rep), QATTN_OK);
    EXPECT_EQ(rep.train + rep.val, 105U);
    EXPECT_EQ(rep.val, 5U);
    EXPECT_EQ(qattn_dataset_size(ds), 105U);

    // Mean and sample deviation of the TRAIN split recomputed from records.
    std::array<double, QATTN_NUM_PROPERTIES> sum{};
    std::vector<std::array<double, QATTN_NUM_PROPERTIES>> rows;
    for (std::size_t i = 0; i < qattn_dataset_size(ds); ++i) {
        qattn_split split{};
        std::array<double, QATTN_NUM_PROPERTIES> p{};
        ASSERT_EQ(qattn_dataset_record(ds, i, nullptr, &split, p.data()), QATTN_OK);
        if (split == QATTN_SPLIT_TRAIN) {
            rows.push_back(p);
        }
    }
    std::array<qattn_property_stats, QATTN_NUM_PROPERTIES> st{};
    ASSERT_EQ(qattn_dataset_stats(ds, st.data()), QATTN_OK);
    for (std::size_t k = 0; k < QATTN_NUM_PROPERTIES; ++k) {
        double mean = 0.0;
        for (const auto &r : rows) {
            mean += r[k] / static_cast<double>(rows.size());
        }
        double var = 0.0;
        for (const auto &r : rows) {
            var += (r[k] - mean) * (r[k] - mean) / static_cast<double>(rows.size() - 1);
        }
        EXPECT_NEAR(st[k].mean, mean, 1e-9);
        EXPECT_NEAR(st[k].stddev, std::sqrt(var), 1e-9);
    }
    EXPECT_EQ(qattn_dataset_record(ds, 999, nullptr, nullptr, nullptr), QATTN_E_USAGE);

    std::array<double, QATTN_NUM_PROPERTIES> knn{};
    ASSERT_EQ(qattn_knn_impute(ds, 0, 100.0, 5, knn.data()), QATTN_OK);
    EXPECT_EQ(knn[0], 100.0);
    EXPECT_EQ(qattn_knn_impute(ds, 12, 100.0, 5, knn.data()), QATTN_E_USAGE);
    qattn_dataset_free(ds);
}

TEST(CApi, ModelSaveLoadAndGenerate) {
    qattn_model *m = small_model(QATTN_VARIANT_QUANTUM, 1);
    const auto dir = fs::temp_directory_path() / "qattn_capi_model";
    fs::create_directories(dir);
    const auto path = (dir / "m.ckpt").string();
    ASSERT_EQ(qattn_model_save(m, path.c_str()), QATTN_OK);
    qattn_model *r = nullptr;
    ASSERT_EQ(qattn_model_load(path.c_str(), &r), QATTN_OK);
    qattn_model_config a{};
    qattn_model_config b{};
    qattn_model_get_config(m, &a);
    qattn_model_get_config(r, &b);
    EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
    EXPECT_EQ(qattn_model_parameter_count(m), qattn_model_parameter_count(r));

    const std::array<double, QATTN_NUM_PROPERTIES> props{120, 2, 1, 1, 1, 2, 30, 0.3, 1};
    qattn_generate_options go{10, 1.0, 77};
    char *s1 = nullptr;
    char *s2 = nullptr;
    ASSERT_EQ(qattn_model_generate(m, props.data(), &go, 5, &s1), QATTN_OK);
    ASSERT_EQ(qattn_model_generate(r, props.data(), &go, 5, &s2), QATTN_OK);
    EXPECT_EQ(take(s1), take(s2));
    char *none = nullptr;
    EXPECT_EQ(qattn_model_generate(m, nullptr, &go, 0, &none), QATTN_E_USAGE);
    qattn_model_free(m);
    qattn_model_free(r);
    fs::remove_all(dir);
}

TEST(CApi, AttentionWeightsAreCausalDistributions) {
    qattn_model *m = small_model(QATTN_VARIANT_QUANTUM, 0);
    std::size_t n = 0;
    ASSERT_EQ(qattn_model_attention(m, "O=[N+]([O-])c1ccoc1", nullptr, nullptr, 0, &n, nullptr),
              QATTN_OK);
    EXPECT_EQ(n, 14U); // 13 tokens plus SOS
    std::vector<double> w(n * n, -1.0);
    char *labels = nullptr;
    ASSERT_EQ(qattn_model_attention(m, "O=[N+]([O-])c1ccoc1", nullptr, w.data(), w.size(), &n,
                                    &labels),
              QATTN_OK);
    const std::string l = take(labels);
    EXPECT_TRUE(l.starts_with("<sos>\nO\n=\n[N+]\n"));
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j > i) {
                EXPECT_EQ(w[i * n + j], 0.0);
            }
            sum += w[i * n + j];
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
    EXPECT_EQ(qattn_model_attention(m, "CXq", nullptr, nullptr, 0, &n, nullptr), QATTN_E_DATA);
    qattn_model_free(m);
}

struct Epochs {
    std::vector<qattn_epoch_metrics> seen;
};

void on_epoch(size_t, const qattn_epoch_metrics *m, void *user) {
    static_cast<Epochs *>(user)->seen.push_back(*m);
}

TEST(CApi, TrainWritesArtifactsAndEvaluateMatchesLog) {
    qattn_dataset *ds = load(84);
    qattn_model *m = small_model(QATTN_VARIANT_CLASSICAL_EQ, 1);
    qattn_train_config tc{};
    qattn_train_config_default(&tc);
    EXPECT_EQ(tc.epochs, 20U);
    EXPECT_EQ(tc.batch_size, 256U);
    EXPECT_DOUBLE_EQ(tc.lr, 0.005);
    EXPECT_DOUBLE_EQ(tc.weight_decay, 0.1);
    EXPECT_DOUBLE_EQ(tc.clip_norm, 1.0);
    EXPECT_DOUBLE_EQ(tc.spsa_epsilon, 0.01);
    tc.epochs = 2;
    tc.batch_size = 16;
    const auto dir = fs::temp_directory_path() / "qattn_capi_train";
    fs::remove_all(dir);
    Epochs seen;
    qattn_train_summary sum{};
    ASSERT_EQ(qattn_train(m, ds, &tc, dir.c_str(), on_epoch, &seen, &sum), QATTN_OK)
        << qattn_last_error();
    EXPECT_EQ(sum.epochs_run, 2U);
    EXPECT_EQ(seen.seen.size(), 3U);
    EXPECT_EQ(sum.optimizer_steps, 2U * 5U); // 80 train rows / 16
    for (const char *f : {"epoch_0.ckpt", "epoch_2.ckpt", "metrics.csv", "summary.json"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    qattn_model *best = nullptr;
    ASSERT_EQ(qattn_model_load((dir / "epoch_2.ckpt").c_str(), &best), QATTN_OK);
    double loss = 0.0;
    double acc = 0.0;
    ASSERT_EQ(qattn_model_evaluate(best, ds, QATTN_SPLIT_VAL, 2, &loss, &acc), QATTN_OK);
    EXPECT_NEAR(loss, seen.seen[2].val_loss, 1e-9);
    EXPECT_NEAR(acc, seen.seen[2].val_accuracy, 1e-9);
    qattn_model_free(best);
    qattn_model_free(m);
    qattn_dataset_free(ds);
    fs::remove_all(dir);
}

TEST(CApi, SmilesAndGenerationMetrics) {
    int valid = -1;
    char *reason = nullptr;
    ASSERT_EQ(qattn_smiles_check("CC(=O)O", &valid, &reason), QATTN_OK);
    EXPECT_EQ(valid, 1);
    EXPECT_EQ(take(reason), "");
    ASSERT_EQ(qattn_smiles_check("C(C", &valid, &reason), QATTN_OK);
    EXPECT_EQ(valid, 0);
    EXPECT_NE(take(reason), "");
    std::array<double, 6> d{};
    ASSERT_EQ(qattn_smiles_descriptors("O", d.data()), QATTN_OK);
    EXPECT_NEAR(d[0], 18.015, 1e-3);
    EXPECT_EQ(d[1], 1.0);
    EXPECT_EQ(d[2], 1.0);
    EXPECT_EQ(qattn_smiles_descriptors("C(", d.data()), QATTN_E_USAGE);

    const char *gen[] = {"C", "C", "Cx"};
    qattn_generation_metrics gm{};
    ASSERT_EQ(qattn_generation_metrics_compute(gen, 3, nullptr, &gm), QATTN_OK);
    EXPECT_NEAR(gm.validity, 200.0 / 3.0, 1e-9);
    EXPECT_NEAR(gm.uniqueness, 50.0, 1e-9);
    EXPECT_NEAR(gm.validity_x_uniqueness, 100.0 / 3.0, 1e-9);
    EXPECT_NEAR(gm.novelty, 100.0, 1e-9);
    char *csv = nullptr;
    ASSERT_EQ(qattn_generation_metrics_format(&gm, 1, &csv), QATTN_OK);
    EXPECT_TRUE(take(csv).starts_with("total,valid,unique_valid,novel,validity_pct"));
}

TEST(CApi, SelftestPassesAndDetectsPerturbation) {
    std::array<qattn_selftest_suite, QATTN_SELFTEST_MAX_SUITES> suites{};
    std::size_t n = 0;
    ASSERT_EQ(qattn_selftest(1, 0.0, suites.data(), &n), QATTN_OK);
    EXPECT_EQ(n, 5U);
    for (std::size_t k = 0; k < n; ++k) {
        EXPECT_GT(suites[k].cases, 0U) << suites[k].name;
        EXPECT_EQ(suites[k].failures, 0U) << suites[k].name;
    }
    EXPECT_EQ(qattn_selftest(1, 1e-6, suites.data(), &n), QATTN_E_INVARIANT);
    EXPECT_STREQ(suites[0].name, "oracle-equivalence");
    EXPECT_EQ(suites[0].failures, suites[0].cases);
    EXPECT_NE(std::string(suites[0].first_failure).find("score - oracle"), std::string::npos);
}

} // namespace
