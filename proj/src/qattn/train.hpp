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
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "qattn/data.hpp"
#include "qattn/grad.hpp"
#include "qattn/model.hpp"

namespace qattn::train {

/// One training or evaluation sequence: SOS, tokens, EOS.
struct Example {
    std::vector<int> row;
    data::PropertyVector properties{};
};

/// Encodes the given dataset records with the model vocabulary. Rows that
/// do not fit max_seq_len throw ValidationError.
std::vector<Example> make_examples(const model::Model &model, const data::Dataset &ds,
                                   std::span<const std::size_t> indices);

struct EvalResult {
    double loss = 0.0;     // mean next-token cross entropy
    double accuracy = 0.0; // argmax hits / tokens
    std::size_t tokens = 0;
};

/// Token-level loss and accuracy; the reduction runs in example order.
EvalResult evaluate(const model::Model &model, std::span<const Example> examples,
                    std::size_t threads = 1);

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 256;
    grad::AdamWConfig optimizer{};
    double spsa_epsilon = 0.01;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    /// When set: epoch_<k>.ckpt, metrics.csv, timing.csv and summary.json.
    std::optional<std::filesystem::path> output_dir;
};

struct EpochMetrics {
    std::size_t epoch = 0;
    EvalResult train;
    std::optional<EvalResult> val;
    double seconds = 0.0;
};

struct TrainResult {
    std::vector<EpochMetrics> history; // history[0] is the untrained model
    std::size_t best_epoch = 0;        // lowest validation (else training) loss
    std::size_t optimizer_steps = 0;
    std::size_t skipped_steps = 0;
};

/// Loss, reverse-mode gradient and token count of one batch.
struct BatchGradient {
    double loss = 0.0;
    std::size_t tokens = 0;
    model::Gradients grads;
};

/// Gradient of the mean batch loss. Circuit parameters of the Quantum
/// variant are left at zero. Items are reduced in fixed-size chunks in
/// order, so the result is independent of `threads`.
BatchGradient batch_gradient(const model::Model &model, std::span<const Example> batch,
                             std::size_t threads);

/// Mean batch loss only (the SPSA objective).
double batch_loss(const model::Model &model, std::span<const Example> batch,
                  std::size_t threads);

/**
 * @brief One optimizer step on a batch.
 *
 * Reverse mode gives the classical gradients; for the Quantum variant one
 * SPSA estimate (2 more forward passes, direction from the (seed, Spsa, step)
 * stream) gives the circuit-parameter gradients. Then one AdamW update.
 * Returns the batch loss before the update.
 */
double train_step(model::Model &model, grad::AdamW &optimizer, std::span<const Example> batch,
                  const TrainConfig &config, std::uint64_t step, bool *applied = nullptr);

/**
 * @brief Full training run on the TRAIN split, validating on VAL.
 *
 * Epoch 0 is the evaluation of the initialized model. Conditioned models
 * standardize properties with TRAIN statistics; the conditioned Quantum
 * model refreezes its property-angle range at the start of every epoch.
 */
TrainResult fit(model::Model &model, const data::Dataset &ds, const TrainConfig &config);

} // namespace qattn::train
