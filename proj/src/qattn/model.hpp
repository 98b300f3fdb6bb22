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
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qattn/attention.hpp"
#include "qattn/data.hpp"
#include "qattn/smiles.hpp"

namespace qattn::model {

using attn::Matrix;
using data::PropertyVector;

enum class Variant : std::uint8_t { Quantum, ClassicalEq, Classical };

std::string_view variant_name(Variant v) noexcept;
/// Accepts "quantum", "classical-eq", "classical".
Variant parse_variant(std::string_view name);

struct ModelConfig {
    Variant variant = Variant::Quantum;
    bool conditioned = false;
    std::size_t working_qubits = 6;
    std::size_t vocab_size = 33;
    /// Rows of the positional tables; longest row including SOS and EOS.
    std::size_t max_seq_len = 32;
    std::size_t d_value = 64;
    std::uint64_t seed = 0;

    /// Classical embedding width, 2^working_qubits.
    [[nodiscard]] std::size_t embed_dim() const noexcept { return std::size_t{1} << working_qubits; }
    /// Angles per register: working_qubits / registers.
    [[nodiscard]] std::size_t angle_dim() const noexcept {
        return working_qubits / (conditioned ? 3 : 2);
    }
    /// Query/key width of the reduced classical model; with angle_dim inputs
    /// this matches the 2 * working_qubits query/key angles of the quantum model.
    [[nodiscard]] std::size_t reduced_qk_dim() const noexcept {
        return working_qubits / angle_dim();
    }
    /// Width whose square root scales the scores.
    [[nodiscard]] std::size_t d_k() const noexcept;

    void validate() const;
    friend bool operator==(const ModelConfig &, const ModelConfig &) = default;
};

/// Row-major named tensor; vectors are 1 x n.
struct Tensor {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    [[nodiscard]] std::size_t size() const noexcept { return data.size(); }
    [[nodiscard]] double &at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    [[nodiscard]] double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Padded token rows. Each row is SOS, tokens, EOS, then PAD.
struct Batch {
    std::size_t batch_size = 0;
    std::size_t length = 0;
    std::vector<int> ids; // batch_size x length
    /// Raw property vectors, one per row; empty for sequence-only models.
    std::vector<PropertyVector> properties;

    [[nodiscard]] int id(std::size_t b, std::size_t i) const { return ids[b * length + i]; }
    [[nodiscard]] bool is_pad(std::size_t b, std::size_t i) const {
        return id(b, i) == smiles::Vocabulary::kPad;
    }
    /// Non-pad prefix of row b.
    [[nodiscard]] std::span<const int> row(std::size_t b) const;
};

/// Pads rows to the longest; rows must already carry SOS/EOS.
Batch make_batch(std::span<const std::vector<int>> rows,
                 std::span<const PropertyVector> properties = {});

/// SOS + tokenize(s) + EOS.
std::vector<int> encode(const smiles::Vocabulary &vocab, std::string_view smiles);

/// Targets for next-token prediction: row shifted left by one, PAD-filled.
std::vector<int> shifted_targets(const Batch &batch);

struct Logits {
    std::size_t batch_size = 0;
    std::size_t length = 0;
    std::size_t vocab = 0;
    std::vector<double> values; // batch x length x vocab; zero at PAD positions

    [[nodiscard]] std::span<const double> at(std::size_t b, std::size_t i) const {
        return {values.data() + (b * length + i) * vocab, vocab};
    }
};

/// Mean cross entropy over positions whose target is not PAD. Throws
/// ValidationError when every target is PAD.
double cross_entropy(const Logits &logits, std::span<const int> targets);

struct ParameterCount {
    std::size_t total = 0;
    std::vector<std::pair<std::string, std::size_t>> per_tensor;
};

/// Closed-form trainable parameter count for a configuration.
std::size_t parameter_count_formula(const ModelConfig &config);

/// Per-sequence forward output.
struct SequenceOutput {
    Matrix logits; // n x vocab
    attn::AttentionMatrix attention;
};

/// Gradient buffers aligned with Model::parameters().
using Gradients = std::vector<std::vector<double>>;

/**
 * @brief One-layer, one-head causal decoder in one of three variants.
 *
 * Every variant computes values from the classical embedding sum
 * Z = token + position [+ projected property]. Attention weights come from
 * score circuits (Quantum), from angle-width embeddings through small
 * query/key maps (ClassicalEq), or from Z through full query/key maps
 * (Classical). Output logits are head(weights * values).
 */
class Model {
  public:
    Model(ModelConfig config, smiles::Vocabulary vocab);

    [[nodiscard]] const ModelConfig &config() const noexcept { return config_; }
    [[nodiscard]] const smiles::Vocabulary &vocab() const noexcept { return vocab_; }

    [[nodiscard]] std::vector<Tensor> &parameters() noexcept { return params_; }
    [[nodiscard]] const std::vector<Tensor> &parameters() const noexcept { return params_; }
    [[nodiscard]] std::vector<Tensor> &buffers() noexcept { return buffers_; }
    [[nodiscard]] const std::vector<Tensor> &buffers() const noexcept { return buffers_; }
    [[nodiscard]] Tensor &parameter(std::string_view name);
    [[nodiscard]] const Tensor &parameter(std::string_view name) const;
    [[nodiscard]] const Tensor *find_parameter(std::string_view name) const;
    [[nodiscard]] Tensor &buffer(std::string_view name);
    [[nodiscard]] const Tensor &buffer(std::string_view name) const;

    /// True for tensors whose gradient comes from SPSA (circuit angles and
    /// the maps feeding them); false for reverse-mode tensors.
    [[nodiscard]] bool is_circuit_parameter(const Tensor &t) const;

    [[nodiscard]] ParameterCount count_parameters() const;

    /// Standardization of raw property vectors (conditioned models).
    void set_property_normalization(const PropertyVector &mean, const PropertyVector &stddev);
    /// Freezes the property-angle range to the projections of `properties`
    /// (conditioned Quantum only; no-op otherwise).
    void refresh_angle_range(std::span<const PropertyVector> properties);
    /// Property register angles for a raw property vector.
    [[nodiscard]] data::ScaledAngles property_angles(const PropertyVector &raw) const;

    /// Logits for every position of a non-padded row and its attention.
    [[nodiscard]] SequenceOutput forward_sequence(std::span<const int> ids,
                                                  const PropertyVector *properties) const;

    /// Logits of the final position only; attention is computed for the last
    /// row alone.
    [[nodiscard]] std::vector<double> next_token_logits(std::span<const int> ids,
                                                        const PropertyVector *properties) const;

    [[nodiscard]] Logits forward(const Batch &batch, std::size_t threads = 1) const;

    /// Summed cross entropy over the row's next-token targets; adds its
    /// reverse-mode gradient (times `scale`) to `grads`. Circuit parameters of
    /// the Quantum variant receive no gradient here.
    struct RowStats {
        double loss_sum = 0.0;
        std::size_t tokens = 0;
        /// Argmax hits; a k-way tie for the maximum that includes the target
        /// earns 1/k.
        double correct = 0.0;
    };
    RowStats backward_row(std::span<const int> row, const PropertyVector *properties,
                          Gradients *grads, double scale) const;

    [[nodiscard]] Gradients zero_gradients() const;

    /// Versioned binary checkpoint; see README for the layout.
    void save(const std::filesystem::path &path) const;
    static Model load(const std::filesystem::path &path);

  private:
    struct Cache;
    void init_tensors();
    [[nodiscard]] std::size_t index_of(std::string_view name) const;
    void forward_cache(std::span<const int> ids, const PropertyVector *properties, Cache &c,
                       bool full_attention) const;
    [[nodiscard]] std::vector<double> normalized(const PropertyVector &raw) const;

    ModelConfig config_;
    smiles::Vocabulary vocab_;
    std::vector<Tensor> params_;
    std::vector<Tensor> buffers_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct GenerateOptions {
    std::size_t max_len = 0; // 0: as long as the positional table allows
    double temperature = 1.0;
    std::uint64_t seed = 0;
};

/**
 * @brief Autoregressive multinomial sampling until EOS or max_len tokens.
 *
 * Sample k draws from the (seed, Sample, k) stream. The result excludes SOS
 * and EOS; a sampled PAD or SOS is kept so the string decodes as invalid.
 */
std::vector<int> generate(const Model &model, const PropertyVector *properties,
                          const GenerateOptions &options, std::uint64_t sample_index = 0);

/// Token strings concatenated, specials spelled out (so they never parse).
std::string decode_lenient(const smiles::Vocabulary &vocab, std::span<const int> ids);

} // namespace qattn::model
