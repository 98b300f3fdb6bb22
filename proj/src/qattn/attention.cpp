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
#include "qattn/attention.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>

#include "qattn/error.hpp"

namespace qattn::attn {

Matrix masked_softmax(const Matrix &scores) {
    QATTN_REQUIRE(scores.rows() == scores.cols(), "score matrix must be square");
    const Eigen::Index n = scores.rows();
    Matrix w = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double mx = scores(i, 0);
        for (Eigen::Index j = 1; j <= i; ++j) {
            mx = std::max(mx, scores(i, j));
        }
        double sum = 0.0;
        for (Eigen::Index j = 0; j <= i; ++j) {
            w(i, j) = std::exp(scores(i, j) - mx);
            sum += w(i, j);
        }
        for (Eigen::Index j = 0; j <= i; ++j) {
            w(i, j) /= sum;
        }
    }
    return w;
}

Matrix masked_softmax_backward(const Matrix &weights, const Matrix &grad_weights) {
    QATTN_REQUIRE(weights.rows() == grad_weights.rows() &&
                      weights.cols() == grad_weights.cols(),
                  "softmax backward shape mismatch");
    const Eigen::Index n = weights.rows();
    Matrix ds = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double dot = 0.0;
        for (Eigen::Index j = 0; j <= i; ++j) {
            dot += weights(i, j) * grad_weights(i, j);
        }
        for (Eigen::Index j = 0; j <= i; ++j) {
            ds(i, j) = weights(i, j) * (grad_weights(i, j) - dot);
        }
    }
    return ds;
}

namespace {

using Bits = std::vector<std::uint64_t>;

void append_bits(Bits &out, const qc::AnsatzParams &p) {
    for (double a : p.angles) {
        out.push_back(std::bit_cast<std::uint64_t>(a));
    }
}

} // namespace

AttentionMatrix quantum_attention_matrix(const QuantumAttentionInput &input, std::size_t d_k,
                                         const QuantumAttentionOptions &options) {
    const std::size_t n = input.tokens.size();
    QATTN_REQUIRE(n >= 1, "attention needs at least one position");
    QATTN_REQUIRE(input.positions.size() == n, "token and position lists differ in length");
    QATTN_REQUIRE(d_k >= 1, "d_k must be positive");

    qc::AttentionCircuitSpec spec;
    spec.mode = input.property ? qc::Mode::Conditioned : qc::Mode::SequenceOnly;
    spec.working_qubits = input.working_qubits;
    spec.query = input.query;
    spec.key = input.key;
    spec.property = input.property;
    spec.token_i = spec.token_j = input.tokens[0];
    spec.position_i = spec.position_j = input.positions[0];
    spec.validate();

    AttentionMatrix out;
    out.n = n;
    out.provenance = Provenance::Quantum;
    out.raw_scores = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));

    // Canonical id per position: first position with bit-identical angles.
    std::vector<std::size_t> id(n);
    {
        std::map<Bits, std::size_t> seen;
        for (std::size_t i = 0; i < n; ++i) {
            Bits key;
            append_bits(key, input.tokens[i]);
            append_bits(key, input.positions[i]);
            id[i] = seen.try_emplace(std::move(key), i).first->second;
        }
    }

    std::map<std::pair<std::size_t, std::size_t>, double> memo;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            if (i == 0) {
                continue;
            }
            const auto key = std::make_pair(id[i], id[j]);
            if (options.dedup) {
                if (auto it = memo.find(key); it != memo.end()) {
                    out.raw_scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        it->second;
                    ++out.dedup_hits;
                    continue;
                }
            }
            spec.token_i = input.tokens[i];
            spec.position_i = input.positions[i];
            spec.token_j = input.tokens[j];
            spec.position_j = input.positions[j];
            const double s = qc::attention_score(spec);
            ++out.circuits_executed;
            out.raw_scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
            if (options.dedup) {
                memo.emplace(key, s);
            }
        }
    }
    out.scaled_scores = out.raw_scores * std::sqrt(static_cast<double>(d_k));
    out.weights = masked_softmax(out.scaled_scores);
    return out;
}

AttentionMatrix classical_attention_matrix(const Matrix &z, const Matrix &w_q,
                                           const Matrix &w_k, std::size_t d_k) {
    QATTN_REQUIRE(z.rows() >= 1, "attention needs at least one position");
    QATTN_REQUIRE(w_q.rows() == z.cols() && w_k.rows() == z.cols(),
                  "projection input dimension does not match embeddings");
    QATTN_REQUIRE(w_q.cols() == w_k.cols(), "query and key projections differ in width");
    QATTN_REQUIRE(d_k >= 1, "d_k must be positive");
    const Matrix q = z * w_q;
    const Matrix k = z * w_k;
    AttentionMatrix out;
    out.n = static_cast<std::size_t>(z.rows());
    out.provenance = Provenance::Classical;
    out.raw_scores = (q * k.transpose()).triangularView<Eigen::Lower>();
    out.scaled_scores = out.raw_scores / std::sqrt(static_cast<double>(d_k));
    out.weights = masked_softmax(out.scaled_scores);
    return out;
}

Matrix apply_attention(const AttentionMatrix &attention, const Matrix &v) {
    QATTN_REQUIRE(v.rows() == attention.weights.cols(),
                  "value rows do not match attention size");
    return attention.weights.triangularView<Eigen::Lower>() * v;
}

void write_weights_csv(std::ostream &out, const Matrix &weights,
                       std::span<const std::string> labels) {
    const bool labelled = !labels.empty();
    QATTN_REQUIRE(!labelled || labels.size() == static_cast<std::size_t>(weights.rows()),
                  "label count does not match matrix size");
    auto quoted = [](const std::string &s) {
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') {
                q += '"';
            }
            q += c;
        }
        return q + "\"";
    };
    if (labelled) {
        out << "\"\"";
        for (const auto &l : labels) {
            out << ',' << quoted(l);
        }
        out << '\n';
    }
    char buf[32];
    for (Eigen::Index i = 0; i < weights.rows(); ++i) {
        if (labelled) {
            out << quoted(labels[static_cast<std::size_t>(i)]) << ',';
        }
        for (Eigen::Index j = 0; j < weights.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", weights(i, j));
            out << (j > 0 ? "," : "") << buf;
        }
        out << '\n';
    }
}

} // namespace qattn::attn
