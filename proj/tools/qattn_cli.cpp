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

// Command-line front end. Talks to the library only through qattn.h.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "qattn.h"

namespace {

namespace fs = std::filesystem;

/// Non-OK status carried to main, which turns it into the exit code.
struct Exit {
    int code;
    std::string message;
};

void check(qattn_status s) {
    if (s != QATTN_OK) {
        throw Exit{static_cast<int>(s), qattn_last_error()};
    }
}

[[noreturn]] void usage(const std::string &message) { throw Exit{QATTN_E_USAGE, message}; }

struct DatasetDeleter {
    void operator()(qattn_dataset *d) const { qattn_dataset_free(d); }
};
struct ModelDeleter {
    void operator()(qattn_model *m) const { qattn_model_free(m); }
};
using DatasetPtr = std::unique_ptr<qattn_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<qattn_model, ModelDeleter>;

/// Owned library string.
std::string take(char *s) {
    std::string out = s == nullptr ? std::string() : std::string(s);
    qattn_string_free(s);
    return out;
}

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

enum class PropertySource { Mean, Median, Mode, Explicit, SweepSigma, SweepIqr };

const std::map<std::string, PropertySource> kSources{
    {"mean", PropertySource::Mean},           {"median", PropertySource::Median},
    {"mode", PropertySource::Mode},           {"explicit", PropertySource::Explicit},
    {"sweep-sigma", PropertySource::SweepSigma}, {"sweep-iqr", PropertySource::SweepIqr}};

/// Flags shared by every command; field names follow the flags.
struct RunConfig {
    std::string data;
    std::string variant = "quantum";
    bool conditioned = false;
    std::size_t working_qubits = 6;
    std::size_t max_seq_len = 32;
    std::size_t d_value = 64;
    std::size_t epochs = 20;
    std::size_t batch_size = 256;
    double lr = 0.005;
    double weight_decay = 0.1;
    double clip_norm = 1.0;
    double spsa_epsilon = 0.01;
    std::uint64_t seed = 0;
    std::uint64_t max_records = 0;
    std::string checkpoint;
    std::string out_dir = "run";
    std::size_t num_samples = 100;
    std::string property_source = "mean";
    std::vector<double> properties;
    std::string sweep_property = "MW";
    std::size_t knn_k = 5;
    double temperature = 1.0;
    std::size_t max_len = 0;
    std::size_t threads = std::max(1U, std::thread::hardware_concurrency());
    std::string output;
    std::string split = "val";
    std::string smiles;
    double perturb_score = 0.0;
    bool quiet = false;
};

DatasetPtr load_dataset(const RunConfig &rc, std::uint64_t split_seed) {
    if (rc.data.empty()) {
        usage("--data is required");
    }
    qattn_ingest_options o{split_seed, rc.max_records};
    qattn_dataset *ds = nullptr;
    check(qattn_dataset_load(rc.data.c_str(), &o, &ds));
    return DatasetPtr(ds);
}

ModelPtr load_model(const RunConfig &rc) {
    if (rc.checkpoint.empty()) {
        usage("--checkpoint is required");
    }
    qattn_model *m = nullptr;
    check(qattn_model_load(rc.checkpoint.c_str(), &m));
    return ModelPtr(m);
}

qattn_model_config config_of(const qattn_model *m) {
    qattn_model_config c{};
    check(qattn_model_get_config(m, &c));
    return c;
}

int property_index(const std::string &name) {
    for (int p = 0; p < QATTN_NUM_PROPERTIES; ++p) {
        if (name == qattn_property_name(p)) {
            return p;
        }
    }
    usage("unknown property '" + name + "'");
}

using Props = std::array<double, QATTN_NUM_PROPERTIES>;

/// One property target: the 9-vector fed to the model plus its label.
struct Target {
    std::string label;
    Props props{};
    double value = 0.0; // swept property's target; NaN outside sweeps
};

std::vector<Target> targets_for(const RunConfig &rc, const qattn_dataset *ds) {
    const auto it = kSources.find(rc.property_source);
    if (it == kSources.end()) {
        usage("unknown --property-source '" + rc.property_source + "'");
    }
    const double nan = std::nan("");
    if (it->second == PropertySource::Explicit) {
        if (rc.properties.size() != QATTN_NUM_PROPERTIES) {
            usage("--properties needs 9 comma-separated values");
        }
        Target t{"explicit", {}, nan};
        std::copy(rc.properties.begin(), rc.properties.end(), t.props.begin());
        return {t};
    }
    if (ds == nullptr) {
        usage("--data is required for property source '" + rc.property_source + "'");
    }
    std::array<qattn_property_stats, QATTN_NUM_PROPERTIES> st{};
    check(qattn_dataset_stats(ds, st.data()));
    auto column = [&](double qattn_property_stats::*field) {
        Props p{};
        for (std::size_t k = 0; k < p.size(); ++k) {
            p[k] = st[k].*field;
        }
        return p;
    };
    switch (it->second) {
    case PropertySource::Mean:
        return {{"mean", column(&qattn_property_stats::mean), nan}};
    case PropertySource::Median:
        return {{"median", column(&qattn_property_stats::median), nan}};
    case PropertySource::Mode:
        return {{"mode", column(&qattn_property_stats::mode), nan}};
    default:
        break;
    }
    const int p = property_index(rc.sweep_property);
    const auto &s = st[static_cast<std::size_t>(p)];
    const bool sigma = it->second == PropertySource::SweepSigma;
    const double center = sigma ? s.mean : s.median;
    const double spread = sigma ? 2.0 * s.stddev : 1.5 * s.iqr;
    std::vector<Target> out;
    for (double sign : {-1.0, 1.0}) {
        Target t;
        t.value = center + sign * spread;
        t.label = rc.sweep_property + (sign < 0 ? " low" : " high");
        check(qattn_knn_impute(ds, p, t.value, rc.knn_k, t.props.data()));
        out.push_back(t);
    }
    return out;
}

void write_file(const std::string &path, const std::string &content) {
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << content)) {
        throw Exit{QATTN_E_DATA, "cannot write " + path};
    }
}

// --------------------------------------------------------------- commands

int cmd_train(const RunConfig &rc) {
    auto ds = load_dataset(rc, rc.seed);
    qattn_ingest_report rep{};
    check(qattn_dataset_report(ds.get(), &rep));
    std::cout << "data: " << rep.rows_read << " rows, " << rep.duplicates_dropped
              << " duplicates, " << rep.nonfinite_rejected << " non-finite; " << rep.train
              << " train / " << rep.val << " val\n";

    qattn_model_config mc{};
    qattn_model_config_default(&mc);
    check(qattn_parse_variant(rc.variant.c_str(), &mc.variant));
    mc.conditioned = rc.conditioned ? 1 : 0;
    mc.working_qubits = rc.working_qubits;
    mc.max_seq_len = rc.max_seq_len;
    mc.d_value = rc.d_value;
    mc.seed = rc.seed;
    qattn_model *raw = nullptr;
    check(qattn_model_create(&mc, &raw));
    ModelPtr model(raw);
    std::cout << "model: " << rc.variant << (rc.conditioned ? " conditioned" : "") << ", "
              << qattn_model_parameter_count(model.get()) << " parameters\n";

    qattn_train_config tc{};
    qattn_train_config_default(&tc);
    tc.epochs = rc.epochs;
    tc.batch_size = rc.batch_size;
    tc.lr = rc.lr;
    tc.weight_decay = rc.weight_decay;
    tc.clip_norm = rc.clip_norm;
    tc.spsa_epsilon = rc.spsa_epsilon;
    tc.seed = rc.seed;
    tc.threads = rc.threads;

    fs::create_directories(rc.out_dir);
    check(qattn_dataset_write_split(ds.get(), (fs::path(rc.out_dir) / "split.csv").c_str()));
    check(qattn_dataset_write_stats(ds.get(), (fs::path(rc.out_dir) / "stats.json").c_str()));
    qattn_train_summary sum{};
    check(qattn_train(model.get(), ds.get(), &tc, rc.out_dir.c_str(), nullptr, nullptr, &sum));
    std::cout << "best epoch " << sum.best_epoch << " (" << rc.out_dir << "/epoch_"
              << sum.best_epoch << ".ckpt); " << sum.optimizer_steps << " steps, "
              << sum.skipped_steps << " skipped\n";
    return 0;
}

int cmd_eval(const RunConfig &rc) {
    auto model = load_model(rc);
    const auto mc = config_of(model.get());
    auto ds = load_dataset(rc, mc.seed);
    if (rc.split != "val" && rc.split != "train") {
        usage("--split must be train or val");
    }
    double loss = 0.0;
    double acc = 0.0;
    check(qattn_model_evaluate(model.get(), ds.get(),
                               rc.split == "val" ? QATTN_SPLIT_VAL : QATTN_SPLIT_TRAIN,
                               rc.threads, &loss, &acc));
    std::cout << "split,loss,accuracy\n" << rc.split << ',' << fmt17(loss) << ',' << fmt17(acc)
              << '\n';
    return 0;
}

int cmd_generate(const RunConfig &rc) {
    auto model = load_model(rc);
    const auto mc = config_of(model.get());
    DatasetPtr ds;
    if (!rc.data.empty()) {
        ds = load_dataset(rc, mc.seed);
    } else if (!rc.quiet) {
        std::cerr << "note: no --data; novelty is measured against an empty training set\n";
    }
    std::vector<Target> targets{{"unconditioned", {}, std::nan("")}};
    if (mc.conditioned != 0) {
        targets = targets_for(rc, ds.get());
    }
    const bool sweep = targets.size() > 1;
    const int swept = sweep ? property_index(rc.sweep_property) : -1;

    qattn_generate_options go{rc.max_len, rc.temperature, rc.seed};
    std::ostringstream samples;
    std::ostringstream sweep_csv;
    sweep_csv << "target,target_value,mean_achieved,valid,total\n";
    std::ostringstream metrics_csv;
    std::uint64_t index = 0;
    for (const auto &t : targets) {
        std::vector<std::string> out;
        for (std::size_t s = 0; s < rc.num_samples; ++s, ++index) {
            char *str = nullptr;
            check(qattn_model_generate(model.get(), mc.conditioned != 0 ? t.props.data() : nullptr,
                                       &go, index, &str));
            out.push_back(take(str));
            samples << (sweep ? t.label + "," : std::string()) << out.back() << '\n';
        }
        std::vector<const char *> ptrs;
        for (const auto &s : out) {
            ptrs.push_back(s.c_str());
        }
        qattn_generation_metrics gm{};
        check(qattn_generation_metrics_compute(ptrs.data(), ptrs.size(), ds.get(), &gm));
        std::cout << "[" << t.label << "]\n" << take([&] {
            char *s = nullptr;
            check(qattn_generation_metrics_format(&gm, 0, &s));
            return s;
        }());
        const std::string csv = take([&] {
            char *s = nullptr;
            check(qattn_generation_metrics_format(&gm, 1, &s));
            return s;
        }());
        metrics_csv << (metrics_csv.tellp() == 0 ? csv : csv.substr(csv.find('\n') + 1));

        if (sweep) {
            // Mean achieved value over valid samples; only the six natively
            // computable descriptors can be measured.
            double sum = 0.0;
            std::size_t valid = 0;
            for (const auto &s : out) {
                std::array<double, 6> d{};
                if (swept < 6 && qattn_smiles_descriptors(s.c_str(), d.data()) == QATTN_OK) {
                    sum += d[static_cast<std::size_t>(swept)];
                    ++valid;
                }
            }
            const std::string achieved =
                swept >= 6 ? "n/a" : (valid > 0 ? fmt17(sum / static_cast<double>(valid)) : "nan");
            std::cout << "  target " << fmt17(t.value) << ", mean achieved " << achieved << " over "
                      << valid << " valid\n";
            sweep_csv << t.label << ',' << fmt17(t.value) << ',' << achieved << ',' << valid << ','
                      << out.size() << '\n';
        }
    }
    const fs::path dir = rc.out_dir;
    fs::create_directories(dir);
    write_file(rc.output.empty() ? (dir / "samples.txt").string() : rc.output, samples.str());
    write_file((dir / "generation_metrics.csv").string(), metrics_csv.str());
    if (sweep) {
        write_file((dir / "sweep.csv").string(), sweep_csv.str());
    }
    return 0;
}

int cmd_attnmap(const RunConfig &rc) {
    if (rc.smiles.empty()) {
        usage("--smiles is required");
    }
    auto model = load_model(rc);
    const auto mc = config_of(model.get());
    Props props{};
    if (mc.conditioned != 0) {
        DatasetPtr ds;
        if (!rc.data.empty()) {
            ds = load_dataset(rc, mc.seed);
        }
        auto t = targets_for(rc, ds.get());
        props = t.front().props;
    }
    std::size_t n = 0;
    check(qattn_model_attention(model.get(), rc.smiles.c_str(), props.data(), nullptr, 0, &n,
                                nullptr));
    std::vector<double> w(n * n);
    char *lab = nullptr;
    check(qattn_model_attention(model.get(), rc.smiles.c_str(), props.data(), w.data(), w.size(),
                                &n, &lab));
    std::vector<std::string> labels;
    std::istringstream ls(take(lab));
    for (std::string l; std::getline(ls, l);) {
        labels.push_back(l);
    }
    auto quote = [](const std::string &s) {
        return s.find_first_of(",\"") == std::string::npos ? s : "\"" + s + "\"";
    };
    std::ostringstream csv;
    csv << "token";
    for (const auto &l : labels) {
        csv << ',' << quote(l);
    }
    csv << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        csv << quote(labels[i]);
        for (std::size_t j = 0; j < n; ++j) {
            csv << ',' << fmt17(w[i * n + j]);
        }
        csv << '\n';
    }
    if (rc.output.empty()) {
        std::cout << csv.str();
    } else {
        write_file(rc.output, csv.str());
    }
    return 0;
}

int cmd_selftest(const RunConfig &rc) {
    std::array<qattn_selftest_suite, QATTN_SELFTEST_MAX_SUITES> suites{};
    std::size_t n = 0;
    const qattn_status s = qattn_selftest(rc.seed + 1, rc.perturb_score, suites.data(), &n);
    if (s != QATTN_OK && s != QATTN_E_INVARIANT) {
        check(s);
    }
    for (std::size_t k = 0; k < n; ++k) {
        const auto &r = suites[k];
        std::cout << (r.failures == 0 ? "PASS " : "FAIL ") << r.name << ": " << r.cases
                  << " cases, " << r.failures << " failures";
        if (r.failures > 0) {
            std::cout << "; first: " << r.first_failure;
        }
        std::cout << '\n';
    }
    std::cout << (s == QATTN_OK ? "selftest PASS" : "selftest FAIL") << '\n';
    return s == QATTN_OK ? 0 : QATTN_E_INVARIANT;
}

int cmd_stats(const RunConfig &rc) {
    auto ds = load_dataset(rc, rc.seed);
    const std::string path = rc.output.empty() ? "stats.json" : rc.output;
    check(qattn_dataset_write_stats(ds.get(), path.c_str()));
    std::array<qattn_property_stats, QATTN_NUM_PROPERTIES> st{};
    check(qattn_dataset_stats(ds.get(), st.data()));
    std::cout << "property,mean,median,mode,std,iqr\n";
    for (int p = 0; p < QATTN_NUM_PROPERTIES; ++p) {
        const auto &s = st[static_cast<std::size_t>(p)];
        std::cout << qattn_property_name(p) << ',' << fmt17(s.mean) << ',' << fmt17(s.median) << ','
                  << fmt17(s.mode) << ',' << fmt17(s.stddev) << ',' << fmt17(s.iqr) << '\n';
    }
    return 0;
}

/// Compares natively computed descriptors against the file's columns.
int cmd_descriptors(const RunConfig &rc) {
    auto ds = load_dataset(rc, rc.seed);
    std::array<std::size_t, 6> mismatches{};
    std::size_t invalid = 0;
    const std::size_t n = qattn_dataset_size(ds.get());
    for (std::size_t i = 0; i < n; ++i) {
        const char *smi = nullptr;
        Props file{};
        check(qattn_dataset_record(ds.get(), i, &smi, nullptr, file.data()));
        std::array<double, 6> d{};
        if (qattn_smiles_descriptors(smi, d.data()) != QATTN_OK) {
            ++invalid;
            if (!rc.quiet) {
                std::cerr << smi << ": " << qattn_last_error() << '\n';
            }
            continue;
        }
        for (std::size_t k = 0; k < d.size(); ++k) {
            const double tol = k == 0 ? 0.01 : 0.0;
            if (std::abs(d[k] - file[k]) > tol) {
                ++mismatches[k];
                if (!rc.quiet) {
                    std::cerr << smi << ": " << qattn_property_name(static_cast<int>(k)) << ' '
                              << d[k] << " vs " << file[k] << '\n';
                }
            }
        }
    }
    std::cout << "records " << n << ", unparsed " << invalid << '\n';
    std::size_t total = invalid;
    for (std::size_t k = 0; k < mismatches.size(); ++k) {
        std::cout << qattn_property_name(static_cast<int>(k)) << " mismatches " << mismatches[k]
                  << '\n';
        total += mismatches[k];
    }
    return total == 0 ? 0 : QATTN_E_INVARIANT;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"qattn: quantum-attention SMILES decoder"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    RunConfig rc;

    auto data_opts = [&](CLI::App *c) {
        c->add_option("--data", rc.data, "Property CSV (SMILES,MW,HBA,...,Stereo)");
        c->add_option("--max-records", rc.max_records, "Keep the first N unique rows (0: all)");
    };
    auto common = [&](CLI::App *c) {
        c->add_option("--seed", rc.seed, "Seed for every random stream");
        c->add_option("--threads", rc.threads, "Worker threads")->check(CLI::PositiveNumber);
        c->add_flag("--quiet", rc.quiet, "Only warnings on the log");
    };
    auto property_opts = [&](CLI::App *c) {
        c->add_option("--property-source", rc.property_source,
                      "mean | median | mode | explicit | sweep-sigma | sweep-iqr");
        c->add_option("--properties", rc.properties, "Nine values for the explicit source")
            ->delimiter(',')
            ->default_str("");
        c->add_option("--sweep-property", rc.sweep_property, "Property swept by sweep sources");
        c->add_option("--knn-k", rc.knn_k, "Neighbors for imputing the other properties");
    };

    auto *train = app.add_subcommand("train", "Train a model; writes checkpoints and logs");
    data_opts(train);
    common(train);
    train->add_option("--variant", rc.variant, "quantum | classical-eq | classical");
    train->add_flag("--conditioned", rc.conditioned, "Condition on the nine properties");
    train->add_option("--working-qubits", rc.working_qubits, "Qubits per score circuit");
    train->add_option("--max-seq-len", rc.max_seq_len, "Positions including SOS and EOS");
    train->add_option("--d-value", rc.d_value, "Value width");
    train->add_option("--epochs", rc.epochs, "Passes over the training split");
    train->add_option("--batch-size", rc.batch_size, "Sequences per optimizer step")->check(CLI::PositiveNumber);
    train->add_option("--lr", rc.lr, "AdamW learning rate");
    train->add_option("--weight-decay", rc.weight_decay, "Decoupled weight decay");
    train->add_option("--clip-norm", rc.clip_norm, "Per-tensor gradient norm cap (0: off)");
    train->add_option("--spsa-epsilon", rc.spsa_epsilon, "SPSA perturbation size");
    train->add_option("--out-dir", rc.out_dir, "Directory for checkpoints and logs");

    auto *gen = app.add_subcommand("generate", "Sample SMILES and report generation metrics");
    data_opts(gen);
    common(gen);
    property_opts(gen);
    gen->add_option("--checkpoint", rc.checkpoint, "Model checkpoint")->required();
    gen->add_option("--num-samples", rc.num_samples, "Samples to draw");
    gen->add_option("--temperature", rc.temperature, "Softmax temperature (> 0)");
    gen->add_option("--max-len", rc.max_len, "Token cap per sample (0: model limit)");
    gen->add_option("--out-dir", rc.out_dir, "Directory for samples and metrics");
    gen->add_option("--output", rc.output, "Samples file (default <out-dir>/samples.txt)");

    auto *eval = app.add_subcommand("eval", "Token-level loss and accuracy of a checkpoint");
    data_opts(eval);
    common(eval);
    eval->add_option("--checkpoint", rc.checkpoint, "Model checkpoint")->required();
    eval->add_option("--split", rc.split, "train | val");

    auto *attn = app.add_subcommand("attnmap", "Attention weights of one SMILES as CSV");
    data_opts(attn);
    common(attn);
    property_opts(attn);
    attn->add_option("--checkpoint", rc.checkpoint, "Model checkpoint")->required();
    attn->add_option("--smiles", rc.smiles, "Molecule to map")->required();
    attn->add_option("--output", rc.output, "CSV path (default stdout)");

    auto *self = app.add_subcommand("selftest", "Run the built-in invariant suites");
    common(self);
    self->add_option("--perturb-score", rc.perturb_score)->group(""); // test hook

    auto *stats = app.add_subcommand("stats", "TRAIN-split property statistics");
    data_opts(stats);
    common(stats);
    stats->add_option("--output", rc.output, "JSON path (default stats.json)");

    auto *desc = app.add_subcommand("descriptors", "Check native descriptors against the file");
    data_opts(desc);
    common(desc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : QATTN_E_USAGE;
    }
    qattn_set_log_level(rc.quiet ? 1 : 0);

    try {
        if (*train) {
            return cmd_train(rc);
        }
        if (*gen) {
            return cmd_generate(rc);
        }
        if (*eval) {
            return cmd_eval(rc);
        }
        if (*attn) {
            return cmd_attnmap(rc);
        }
        if (*self) {
            return cmd_selftest(rc);
        }
        if (*stats) {
            return cmd_stats(rc);
        }
        return cmd_descriptors(rc);
    } catch (const Exit &e) {
        std::cerr << "error: " << e.message << '\n';
        return e.code;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return QATTN_E_DATA;
    }
}
