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
#include "qattn/qcircuits.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <unordered_set>

#include "qattn/error.hpp"

namespace qattn::qc {

namespace {

using sim::Circuit;
using sim::GateOp;
using Tag = TaggedCircuit::Tag;

void append_ansatz(TaggedCircuit &c, std::span<const double> angles,
                   std::size_t first, ParamGroup group) {
    for (std::size_t k = 0; k < angles.size(); ++k) {
        c.gates.push_back(GateOp::ry(first + k, angles[k]));
        c.tags.push_back({group, k});
    }
    for (std::size_t k = 0; k + 1 < angles.size(); ++k) {
        c.gates.push_back(GateOp::cnot(first + k, first + k + 1));
        c.tags.push_back({});
    }
}

/// Appends `sub` (or its adjoint) with an extra control on `control`.
void append_controlled(TaggedCircuit &c, const TaggedCircuit &sub,
                       std::size_t control, bool adjoint) {
    const std::uint64_t cbit = std::uint64_t{1} << control;
    const std::size_t n = sub.gates.size();
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = adjoint ? n - 1 - k : k;
        GateOp g = adjoint ? sim::adjoint(sub.gates[src]) : sub.gates[src];
        g.controls |= cbit;
        c.gates.push_back(g);
        Tag t = sub.tags[src];
        if (adjoint) {
            t.sign = -t.sign;
        }
        c.tags.push_back(t);
    }
}

TaggedCircuit ansatz_block(std::span<const double> angles, std::size_t first,
                           ParamGroup group) {
    TaggedCircuit c;
    append_ansatz(c, angles, first, group);
    return c;
}

void append(TaggedCircuit &dst, const TaggedCircuit &src) {
    dst.gates.insert(dst.gates.end(), src.gates.begin(), src.gates.end());
    dst.tags.insert(dst.tags.end(), src.tags.begin(), src.tags.end());
}

} // namespace

Circuit build_ansatz(std::span<const double> angles, std::size_t first_qubit) {
    QATTN_REQUIRE(!angles.empty(), "ansatz register must have at least one qubit");
    Circuit c;
    c.reserve(2 * angles.size() - 1);
    for (std::size_t k = 0; k < angles.size(); ++k) {
        c.push_back(GateOp::ry(first_qubit + k, angles[k]));
    }
    for (std::size_t k = 0; k + 1 < angles.size(); ++k) {
        c.push_back(GateOp::cnot(first_qubit + k, first_qubit + k + 1));
    }
    return c;
}

void AttentionCircuitSpec::validate() const {
    const std::size_t regs = register_count(mode);
    if (working_qubits == 0 || working_qubits % regs != 0) {
        throw ValidationError(std::to_string(working_qubits) +
                              " working qubits cannot be split into " +
                              std::to_string(regs) + " equal registers");
    }
    if (working_qubits + 1 > sim::StateVector::kMaxQubits) {
        throw ValidationError("too many working qubits");
    }
    const std::size_t r = register_size();
    auto check = [r](const AnsatzParams &p, const char *what) {
        if (p.size() != r) {
            throw ValidationError(std::string(what) + " has " +
                                  std::to_string(p.size()) + " angles, expected " +
                                  std::to_string(r));
        }
    };
    check(token_i, "token_i");
    check(position_i, "position_i");
    check(token_j, "token_j");
    check(position_j, "position_j");
    if (mode == Mode::Conditioned) {
        if (!property) {
            throw ValidationError("conditioned spec without property angles");
        }
        check(*property, "property");
    } else if (property) {
        throw ValidationError("sequence-only spec carries property angles");
    }
    if (query.size() != working_qubits || key.size() != working_qubits) {
        throw ValidationError("query/key ansatz must span the working register");
    }
}

const AnsatzParams &params_of(const AttentionCircuitSpec &spec, ParamGroup group) {
    switch (group) {
    case ParamGroup::TokenI:
        return spec.token_i;
    case ParamGroup::PositionI:
        return spec.position_i;
    case ParamGroup::TokenJ:
        return spec.token_j;
    case ParamGroup::PositionJ:
        return spec.position_j;
    case ParamGroup::Property:
        QATTN_REQUIRE(spec.property.has_value(), "spec has no property register");
        return *spec.property;
    case ParamGroup::Query:
        return spec.query;
    case ParamGroup::Key:
        return spec.key;
    case ParamGroup::None:
        break;
    }
    throw ValidationError("parameter group None names no parameters");
}

AnsatzParams &params_of(AttentionCircuitSpec &spec, ParamGroup group) {
    return const_cast<AnsatzParams &>(
        params_of(static_cast<const AttentionCircuitSpec &>(spec), group));
}

TaggedCircuit build_score_circuit(const AttentionCircuitSpec &spec) {
    spec.validate();
    const std::size_t r = spec.register_size();
    const std::size_t anc = spec.ancilla();

    const TaggedCircuit prep_tok_i = ansatz_block(spec.token_i.angles, 0, ParamGroup::TokenI);
    const TaggedCircuit prep_pos_i =
        ansatz_block(spec.position_i.angles, r, ParamGroup::PositionI);
    const TaggedCircuit prep_tok_j = ansatz_block(spec.token_j.angles, 0, ParamGroup::TokenJ);
    const TaggedCircuit prep_pos_j =
        ansatz_block(spec.position_j.angles, r, ParamGroup::PositionJ);
    const TaggedCircuit uq = ansatz_block(spec.query.angles, 0, ParamGroup::Query);
    const TaggedCircuit uk = ansatz_block(spec.key.angles, 0, ParamGroup::Key);

    TaggedCircuit c;
    c.gates.reserve(score_circuit_gate_count(spec.mode, spec.working_qubits));
    c.tags.reserve(c.gates.capacity());

    // |z_i> (with the property state in its own register), then |q_i>.
    append(c, prep_tok_i);
    append(c, prep_pos_i);
    if (spec.mode == Mode::Conditioned) {
        append_ansatz(c, spec.property->angles, 2 * r, ParamGroup::Property);
    }
    append(c, uq);

    c.gates.push_back(GateOp::h(anc));
    c.tags.push_back({});

    // On the |1> branch: undo U_q and the token/position preparations. The
    // property register is uniform across the sequence and stays prepared.
    append_controlled(c, uq, anc, true);
    append_controlled(c, prep_pos_i, anc, true);
    append_controlled(c, prep_tok_i, anc, true);

    // On the |1> branch: prepare |z_j> and evolve it into |k_j>.
    append_controlled(c, prep_tok_j, anc, false);
    append_controlled(c, prep_pos_j, anc, false);
    append_controlled(c, uk, anc, false);

    c.gates.push_back(GateOp::h(anc));
    c.tags.push_back({});
    return c;
}

double attention_score(const AttentionCircuitSpec &spec) {
    const TaggedCircuit c = build_score_circuit(spec);
    sim::StateVector psi(spec.working_qubits + 1);
    psi.apply(c.gates);
    return psi.expectation_z(spec.ancilla());
}

double oracle_inner_product(const AttentionCircuitSpec &spec) {
    spec.validate();
    const std::size_t r = spec.register_size();
    auto prepare = [&](const AnsatzParams &tok, const AnsatzParams &pos,
                       const AnsatzParams &evolve) {
        sim::StateVector s(spec.working_qubits);
        s.apply(build_ansatz(tok, 0));
        s.apply(build_ansatz(pos, r));
        if (spec.property) {
            s.apply(build_ansatz(*spec.property, 2 * r));
        }
        s.apply(build_ansatz(evolve, 0));
        return s;
    };
    const sim::StateVector q = prepare(spec.token_i, spec.position_i, spec.query);
    const sim::StateVector k = prepare(spec.token_j, spec.position_j, spec.key);
    return q.inner(k).real();
}

std::size_t score_circuit_gate_count(Mode mode, std::size_t working_qubits) {
    const std::size_t regs = register_count(mode);
    const std::size_t r = working_qubits / regs;
    const std::size_t reg_block = 2 * r - 1;
    const std::size_t full_block = 2 * working_qubits - 1;
    // i-side preparation of every register, undo + redo of token/position,
    // U_q, controlled U_q^dagger, controlled U_k, two Hadamards.
    return regs * reg_block + 4 * reg_block + 3 * full_block + 2;
}

namespace {

/// Exact identity of a parameter vector, bit for bit.
std::vector<std::uint64_t> bits_of(const AnsatzParams &p) {
    std::vector<std::uint64_t> out(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        out[k] = std::bit_cast<std::uint64_t>(p.angles[k]);
    }
    return out;
}

struct PairHash {
    std::size_t operator()(const std::pair<std::size_t, std::size_t> &p) const noexcept {
        return std::hash<std::size_t>{}(p.first * 0x9e3779b97f4a7c15ULL ^ p.second);
    }
};

} // namespace

std::size_t unique_circuit_count(std::span<const AnsatzParams> token_params,
                                 std::span<const AnsatzParams> position_params,
                                 bool /*conditioned*/) {
    QATTN_REQUIRE(token_params.size() == position_params.size(),
                  "token and position parameter lists differ in length");
    const std::size_t n = token_params.size();
    QATTN_REQUIRE(n >= 1, "sequence must contain at least one token");

    // Canonical id per position: the first position with identical angles.
    std::vector<std::size_t> id(n);
    std::vector<std::pair<std::vector<std::uint64_t>, std::vector<std::uint64_t>>> seen;
    for (std::size_t i = 0; i < n; ++i) {
        auto key = std::make_pair(bits_of(token_params[i]), bits_of(position_params[i]));
        std::size_t found = seen.size();
        for (std::size_t s = 0; s < seen.size(); ++s) {
            if (seen[s] == key) {
                found = s;
                break;
            }
        }
        if (found == seen.size()) {
            seen.push_back(std::move(key));
        }
        id[i] = found;
    }
    std::unordered_set<std::pair<std::size_t, std::size_t>, PairHash> tuples;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            if (i == 0 && j == 0) {
                continue;
            }
            tuples.insert({id[i], id[j]});
        }
    }
    return tuples.size();
}

std::size_t unique_circuit_count(std::span<const int> token_ids, bool conditioned) {
    std::vector<AnsatzParams> tok;
    std::vector<AnsatzParams> pos(token_ids.size(), AnsatzParams{{0.0}});
    tok.reserve(token_ids.size());
    for (int t : token_ids) {
        tok.push_back(AnsatzParams{{static_cast<double>(t)}});
    }
    return unique_circuit_count(tok, pos, conditioned);
}

double amplify(std::span<const sim::GateOp> circuit, std::size_t num_qubits,
               std::size_t ancilla, int iterations) {
    QATTN_REQUIRE(iterations >= 0, "iteration count must be non-negative");
    const sim::Circuit inverse = sim::adjoint(circuit);
    sim::StateVector psi(num_qubits);
    psi.apply(circuit);
    for (int m = 0; m < iterations; ++m) {
        psi.apply(sim::GateOp::z(ancilla)); // R_good
        psi.apply(inverse);                 // R_psi = A (2|0><0| - I) A^dagger
        psi.reflect_about_zero();
        psi.apply(circuit);
    }
    return psi.probability_zero(ancilla);
}

double amplitude_amplification_demo(const AttentionCircuitSpec &spec, int iterations) {
    const TaggedCircuit c = build_score_circuit(spec);
    return amplify(c.gates, spec.working_qubits + 1, spec.ancilla(), iterations);
}

double amplified_probability(double p0, int iterations) {
    const double theta = std::asin(std::sqrt(std::clamp(p0, 0.0, 1.0)));
    const double s = std::sin((2.0 * iterations + 1.0) * theta);
    return s * s;
}

} // namespace qattn::qc
