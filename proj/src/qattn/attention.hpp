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
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qattn/qcircuits.hpp"

namespace qattn::attn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Provenance : std::uint8_t { Quantum, Classical };

/**
 * @brief A causal n x n attention matrix.
 *
 * Only the lower triangle (j <= i) of the score matrices is meaningful; the
 * strict upper triangle of `weights` is exactly zero.
 */
struct AttentionMatrix {
    std::size_t n = 0;
    /// Unscaled scores: Re<q_i|k_j> for quantum, q_i . k_j for classical.
    Matrix raw_scores;
    /// Scores fed to the softmax.
    Matrix scaled_scores;
    Matrix weights;
    Provenance provenance = Provenance::Classical;
    std::size_t circuits_executed = 0;
    std::size_t dedup_hits = 0;
};

/// Row-wise softmax restricted to each row's prefix j <= i; zeros above.
Matrix masked_softmax(const Matrix &scores);

/// Given weights A = masked_softmax(S) and dL/dA, returns dL/dS (zero above
/// the diagonal).
Matrix masked_softmax_backward(const Matrix &weights, const Matrix &grad_weights);

/// Per-position circuit parameters for one sequence.
struct QuantumAttentionInput {
    std::vector<qc::AnsatzParams> tokens;
    std::vector<qc::AnsatzParams> positions;
    qc::AnsatzParams query;
    qc::AnsatzParams key;
    /// Present exactly in conditioned mode; shared by all positions.
    std::optional<qc::AnsatzParams> property;
    std::size_t working_qubits = 6;
};

struct QuantumAttentionOptions {
    /// Reuse scores of bit-identical (token_i, pos_i, token_j, pos_j) tuples.
    bool dedup = true;
};

/**
 * @brief Fills the causal matrix from score circuits.
 *
 * Scaled scores are sqrt(d_k) * Re<q_i|k_j>. Entry (0, 0) is never run: its
 * row has a single unmasked element, so the weight is 1 whatever the score;
 * its raw score is recorded as 0.
 */
AttentionMatrix quantum_attention_matrix(const QuantumAttentionInput &input, std::size_t d_k,
                                         const QuantumAttentionOptions &options = {});

/// Q = Z W_Q, K = Z W_K, scaled scores QK^T / sqrt(d_k), masked softmax.
AttentionMatrix classical_attention_matrix(const Matrix &z, const Matrix &w_q,
                                           const Matrix &w_k, std::size_t d_k);

/// weights * V. Row i is a convex combination of V rows 0..i.
Matrix apply_attention(const AttentionMatrix &attention, const Matrix &v);

/// Full n x n weights, row-major, 17 significant digits. With labels, a
/// header row and a leading label column are added.
void write_weights_csv(std::ostream &out, const Matrix &weights,
                       std::span<const std::string> labels = {});

} // namespace qattn::attn
