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
#include <optional>
#include <span>
#include <vector>

#include "qattn/statevec.hpp"

namespace qattn::qc {

/// Angles of a single-layer RY ansatz; one angle per register qubit.
struct AnsatzParams {
    std::vector<double> angles;

    [[nodiscard]] std::size_t size() const noexcept { return angles.size(); }
    friend bool operator==(const AnsatzParams &, const AnsatzParams &) = default;
};

/// One RY per qubit on [first_qubit, first_qubit + n), then a CNOT chain
/// q -> q+1 across the register.
sim::Circuit build_ansatz(std::span<const double> angles, std::size_t first_qubit);
inline sim::Circuit build_ansatz(const AnsatzParams &p, std::size_t first_qubit) {
    return build_ansatz(p.angles, first_qubit);
}

enum class Mode : std::uint8_t { SequenceOnly, Conditioned };

/// Registers per mode: token + position, plus one property register when
/// conditioned.
constexpr std::size_t register_count(Mode m) noexcept {
    return m == Mode::SequenceOnly ? 2 : 3;
}

/**
 * @brief Everything needed to build one query/key score circuit.
 *
 * Layout on the simulator: token register on the lowest qubits, then
 * position, then property (conditioned only); the ancilla is qubit
 * `working_qubits`.
 */
struct AttentionCircuitSpec {
    Mode mode = Mode::SequenceOnly;
    std::size_t working_qubits = 6;
    AnsatzParams token_i;
    AnsatzParams position_i;
    AnsatzParams token_j;
    AnsatzParams position_j;
    std::optional<AnsatzParams> property;
    AnsatzParams query;
    AnsatzParams key;

    [[nodiscard]] std::size_t register_size() const noexcept {
        return working_qubits / register_count(mode);
    }
    [[nodiscard]] std::size_t ancilla() const noexcept { return working_qubits; }

    /// Throws ValidationError when the registers do not tile the working
    /// register or a parameter vector has the wrong length.
    void validate() const;
};

/// Which parameter vector a score-circuit rotation was drawn from.
enum class ParamGroup : std::uint8_t {
    None,
    TokenI,
    PositionI,
    TokenJ,
    PositionJ,
    Property,
    Query,
    Key,
};

/// The parameter vector of `spec` that a group names. Throws on None and on
/// Property for a sequence-only spec.
AnsatzParams &params_of(AttentionCircuitSpec &spec, ParamGroup group);
const AnsatzParams &params_of(const AttentionCircuitSpec &spec, ParamGroup group);

/// Gate list with per-gate provenance, used for gate-level differentiation.
struct TaggedCircuit {
    sim::Circuit gates;
    struct Tag {
        ParamGroup group = ParamGroup::None;
        std::size_t index = 0;
        /// d(gate angle)/d(parameter): -1 inside an adjoint block.
        double sign = 1.0;
    };
    std::vector<Tag> tags;
};

/// The full modified Hadamard-test circuit, ending with the final H on the
/// ancilla. Simulating it from |0...0> yields Re<q_i|k_j> as <Z_ancilla>.
TaggedCircuit build_score_circuit(const AttentionCircuitSpec &spec);

/// Re<q_i|k_j> from the ancilla <Z> of the score circuit.
double attention_score(const AttentionCircuitSpec &spec);

/// Re<q_i|k_j> from two directly prepared states (no ancilla, no controls).
double oracle_inner_product(const AttentionCircuitSpec &spec);

/// Closed-form gate count of the score circuit. Linear in working_qubits for
/// a fixed register count.
std::size_t score_circuit_gate_count(Mode mode, std::size_t working_qubits);

/**
 * @brief Number of distinct score circuits needed for a masked n x n matrix.
 *
 * Counts distinct (token_i, position_i, token_j, position_j) parameter
 * tuples over j <= i, excluding the (0, 0) entry whose softmax is always 1.
 * The property register is uniform across a sequence and does not affect
 * the count.
 */
std::size_t unique_circuit_count(std::span<const AnsatzParams> token_params,
                                 std::span<const AnsatzParams> position_params,
                                 bool conditioned);

/// Token-id form: positional angles are taken at their zero initialization,
/// so two positions share parameters exactly when their tokens match.
std::size_t unique_circuit_count(std::span<const int> token_ids, bool conditioned);

/// Probability of ancilla |0> after `iterations` Grover steps
/// G = R_psi R_good applied to psi = circuit|0...0>, with R_good = Z_ancilla.
double amplify(std::span<const sim::GateOp> circuit, std::size_t num_qubits,
               std::size_t ancilla, int iterations);

/// `amplify` on the score circuit of `spec`.
double amplitude_amplification_demo(const AttentionCircuitSpec &spec, int iterations);

/// sin^2((2m + 1) asin(sqrt(p0))).
double amplified_probability(double p0, int iterations);

} // namespace qattn::qc
