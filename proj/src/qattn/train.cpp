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
#include "qattn/train.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "qattn/error.hpp"
#include "qattn/parallel.hpp"
#include "qattn/rng.hpp"

namespace qattn::train {

namespace {

/// Items per reduction chunk; fixed so sums never depend on thread count.
constexpr std::size_t kChunk = 8;

const data::PropertyVector *props_of(const model::Model &m, const Example &e) {
    return m.config().conditioned ? &e.properties : nullptr;
}

std::size_t token_count(std::span<const Example> batch) {
    std::size_t n = 0;
    for (const auto &e : batch) {
        n += e.row.size() - 1;
    }
    return n;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::vector<Example> make_examples(const model::Model &model, const data::Dataset &ds,
                                   std::span<const std::size_t> indices) {
    std::vector<Example> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) {
        const auto &r = ds.records.at(i);
        Example e{model::encode(model.vocab(), r.smiles), r.props};
        if (e.row.size() > model.config().max_seq_len) {
            throw ValidationError("'" + r.smiles + "' needs " + std::to_string(e.row.size()) +
                                  " positions; max_seq_len is " +
                                  std::to_string(model.config().max_seq_len));
        }
        out.push_back(std::move(e));
    }
    return out;
}

EvalResult evaluate(const model::Model &model, std::span<const Example> examples,
                    std::size_t threads) {
    std::vector<model::Model::RowStats> stats(examples.size());
    parallel_for(examples.size(), threads, [&](std::size_t i) {
        stats[i] = model.backward_row(examples[i].row, props_of(model, examples[i]), nullptr, 0.0);
    });
    EvalResult r;
    double loss = 0.0;
    double correct = 0.0;
    for (const auto &s : stats) {
        loss += s.loss_sum;
        r.tokens += s.tokens;
        correct += s.correct;
    }
    if (r.tokens > 0) {
        r.loss = loss / static_cast<double>(r.tokens);
        r.accuracy = correct / static_cast<double>(r.tokens);
    }
    return r;
}

BatchGradient batch_gradient(const model::Model &model, std::span<const Example> batch,
                             std::size_t threads) {
    QATTN_REQUIRE(!batch.empty(), "empty batch");
    BatchGradient out;
    out.tokens = token_count(batch);
    const double scale = 1.0 / static_cast<double>(out.tokens);
    const std::size_t chunks = (batch.size() + kChunk - 1) / kChunk;
    std::vector<model::Gradients> partial(chunks);
    std::vector<double> losses(chunks, 0.0);
    parallel_for(chunks, threads, [&](std::size_t c) {
        partial[c] = model.zero_gradients();
        const std::size_t end = std::min(batch.size(), (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) {
            losses[c] +=
                model.backward_row(batch[i].row, props_of(model, batch[i]), &partial[c], scale)
                    .loss_sum;
        }
    });
    out.grads = std::move(partial[0]);
    double loss = losses[0];
    for (std::size_t c = 1; c < chunks; ++c) {
        loss += losses[c];
        for (std::size_t t = 0; t < out.grads.size(); ++t) {
            for (std::size_t k = 0; k < out.grads[t].size(); ++k) {
                out.grads[t][k] += partial[c][t][k];
            }
        }
    }
    out.loss = loss * scale;
    return out;
}

double batch_loss(const model::Model &model, std::span<const Example> batch,
                  std::size_t threads) {
    std::vector<double> losses(batch.size());
    parallel_for(batch.size(), threads, [&](std::size_t i) {
        losses[i] =
            model.backward_row(batch[i].row, props_of(model, batch[i]), nullptr, 0.0).loss_sum;
    });
    return std::accumulate(losses.begin(), losses.end(), 0.0) /
           static_cast<double>(token_count(batch));
}

double train_step(model::Model &model, grad::AdamW &optimizer, std::span<const Example> batch,
                  const TrainConfig &config, std::uint64_t step, bool *applied) {
    BatchGradient bg = batch_gradient(model, batch, config.threads);
    auto &params = model.parameters();

    if (model.config().variant == model::Variant::Quantum) {
        std::vector<std::size_t> circuit;
        std::vector<double> x;
        for (std::size_t t = 0; t < params.size(); ++t) {
            if (model.is_circuit_parameter(params[t])) {
                circuit.push_back(t);
                x.insert(x.end(), params[t].data.begin(), params[t].data.end());
            }
        }
        auto load = [&](std::span<const double> values) {
            std::size_t off = 0;
            for (std::size_t t : circuit) {
                std::copy(values.begin() + static_cast<long>(off),
                          values.begin() + static_cast<long>(off + params[t].size()),
                          params[t].data.begin());
                off += params[t].size();
            }
        };
        const grad::ScalarFn f = [&](std::span<const double> probe) {
            load(probe);
            return batch_loss(model, batch, config.threads);
        };
        const auto est = grad::spsa_grad(f, x, config.spsa_epsilon, config.seed, step);
        load(x);
        std::size_t off = 0;
        for (std::size_t t : circuit) {
            std::copy(est.gradient.begin() + static_cast<long>(off),
                      est.gradient.begin() + static_cast<long>(off + params[t].size()),
                      bg.grads[t].begin());
            off += params[t].size();
        }
    }

    std::vector<grad::TensorSlot> slots;
    slots.reserve(params.size());
    for (std::size_t t = 0; t < params.size(); ++t) {
        slots.push_back({params[t].name, params[t].data, bg.grads[t]});
    }
    const bool ok = optimizer.step(slots);
    if (applied != nullptr) {
        *applied = ok;
    }
    return bg.loss;
}

TrainResult fit(model::Model &model, const data::Dataset &ds, const TrainConfig &config) {
    QATTN_REQUIRE(config.batch_size >= 1, "batch_size must be positive");
    QATTN_REQUIRE(config.spsa_epsilon > 0.0, "spsa_epsilon must be positive");
    const auto train_idx = ds.indices(data::Split::Train);
    const auto val_idx = ds.indices(data::Split::Val);
    if (train_idx.empty()) {
        throw DataError("training split is empty");
    }
    const auto train_set = make_examples(model, ds, train_idx);
    const auto val_set = make_examples(model, ds, val_idx);

    std::vector<data::PropertyVector> train_props;
    if (model.config().conditioned) {
        const auto stats = data::property_stats(ds);
        data::PropertyVector mean{};
        data::PropertyVector sd{};
        for (std::size_t p = 0; p < smiles::kNumProperties; ++p) {
            mean[p] = stats[p].mean;
            sd[p] = stats[p].stddev;
        }
        model.set_property_normalization(mean, sd);
        for (const auto &e : train_set) {
            train_props.push_back(e.properties);
        }
    }

    std::ofstream metrics;
    std::ofstream timing;
    if (config.output_dir) {
        std::filesystem::create_directories(*config.output_dir);
        metrics.open(*config.output_dir / "metrics.csv", std::ios::binary | std::ios::trunc);
        timing.open(*config.output_dir / "timing.csv", std::ios::binary | std::ios::trunc);
        if (!metrics || !timing) {
            throw DataError("cannot write logs in " + config.output_dir->string());
        }
        metrics << "epoch,split,loss,accuracy\n";
        timing << "epoch,seconds\n";
    }

    TrainResult result;
    grad::AdamW optimizer(config.optimizer);
    std::uint64_t step = 0;
    auto best_loss = std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 0; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        model.refresh_angle_range(train_props);
        if (epoch > 0) {
            std::vector<std::size_t> order(train_set.size());
            std::iota(order.begin(), order.end(), 0);
            Rng rng(config.seed, Purpose::Shuffle, epoch);
            for (std::size_t i = order.size(); i > 1; --i) {
                std::swap(order[i - 1], order[rng.below(i)]);
            }
            std::vector<Example> batch;
            for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
                batch.clear();
                const std::size_t end = std::min(order.size(), start + config.batch_size);
                for (std::size_t i = start; i < end; ++i) {
                    batch.push_back(train_set[order[i]]);
                }
                bool applied = false;
                (void)train_step(model, optimizer, batch, config, step++, &applied);
                ++result.optimizer_steps;
                result.skipped_steps += applied ? 0 : 1;
            }
        }

        EpochMetrics em;
        em.epoch = epoch;
        em.train = evaluate(model, train_set, config.threads);
        if (!val_set.empty()) {
            em.val = evaluate(model, val_set, config.threads);
        }
        em.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const double key = em.val ? em.val->loss : em.train.loss;
        if (key < best_loss) {
            best_loss = key;
            result.best_epoch = epoch;
        }
        spdlog::info("epoch {}: train loss {:.4f} acc {:.4f}{}", epoch, em.train.loss,
                     em.train.accuracy,
                     em.val ? fmt::format(", val loss {:.4f} acc {:.4f}", em.val->loss,
                                          em.val->accuracy)
                            : std::string());
        if (config.output_dir) {
            metrics << epoch << ",train," << fmt(em.train.loss) << ',' << fmt(em.train.accuracy)
                    << '\n';
            if (em.val) {
                metrics << epoch << ",val," << fmt(em.val->loss) << ','
                        << fmt(em.val->accuracy) << '\n';
            }
            metrics.flush();
            timing << epoch << ',' << fmt(em.seconds) << '\n';
            model.save(*config.output_dir / ("epoch_" + std::to_string(epoch) + ".ckpt"));
        }
        result.history.push_back(em);
    }

    if (config.output_dir) {
        nlohmann::ordered_json s;
        s["best_epoch"] = result.best_epoch;
        s["best_checkpoint"] = "epoch_" + std::to_string(result.best_epoch) + ".ckpt";
        s["optimizer_steps"] = result.optimizer_steps;
        s["skipped_steps"] = result.skipped_steps;
        std::ofstream(*config.output_dir / "summary.json") << s.dump(2) << '\n';
    }
    return result;
}

} // namespace qattn::train
