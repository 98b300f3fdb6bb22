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
#include "qattn/statevec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qattn/error.hpp"
#include "qattn/rng.hpp"

namespace qattn::sim {

namespace {
constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
} // namespace

GateOp adjoint(const GateOp &op) {
    GateOp inv = op;
    if (op.kind == GateKind::RY) {
        inv.angle = -op.angle;
    }
    return inv;
}

Circuit adjoint(std::span<const GateOp> circuit) {
    Circuit out;
    out.reserve(circuit.size());
    for (auto it = circuit.rbegin(); it != circuit.rend(); ++it) {
        out.push_back(adjoint(*it));
    }
    return out;
}

std::uint64_t support_mask(const GateOp &op) {
    return op.controls | (std::uint64_t{1} << op.target);
}

StateVector::StateVector(std::size_t num_qubits) : num_qubits_(num_qubits) {
    if (num_qubits < 1 || num_qubits > kMaxQubits) {
        throw ResourceError("qubit count " + std::to_string(num_qubits) +
                            " outside [1, " + std::to_string(kMaxQubits) + "]");
    }
    amps_.assign(std::size_t{1} << num_qubits, Complex{0.0, 0.0});
    amps_[0] = Complex{1.0, 0.0};
}

double StateVector::norm_squared() const noexcept {
    double s = 0.0;
    for (const auto &a : amps_) {
        s += std::norm(a);
    }
    return s;
}

void StateVector::reset() noexcept {
    std::fill(amps_.begin(), amps_.end(), Complex{0.0, 0.0});
    amps_[0] = Complex{1.0, 0.0};
}

void StateVector::validate(const GateOp &op) const {
    if (op.target >= num_qubits_) {
        throw ValidationError("gate target " + std::to_string(op.target) +
                              " out of range for " +
                              std::to_string(num_qubits_) + " qubits");
    }
    if ((op.controls >> num_qubits_) != 0U) {
        throw ValidationError("gate control out of range");
    }
    if (op.has_control(op.target)) {
        throw ValidationError("gate target collides with a control");
    }
    if (op.kind == GateKind::CNOT && op.controls == 0U) {
        throw ValidationError("CNOT without a control qubit");
    }
    if (op.kind == GateKind::RY && !std::isfinite(op.angle)) {
        throw ValidationError("non-finite RY angle");
    }
}

void StateVector::apply_unchecked(const GateOp &op) noexcept {
    const std::size_t tbit = std::size_t{1} << op.target;
    const std::size_t cmask = op.controls;
    const std::size_t n = amps_.size();
    Complex *a = amps_.data();

    if (op.kind == GateKind::PauliZ) {
        const std::size_t need = cmask | tbit;
        for (std::size_t i = 0; i < n; ++i) {
            if ((i & need) == need) {
                a[i] = -a[i];
            }
        }
        return;
    }

    // 2x2 real matrix [[m00, m01], [m10, m11]] on the (i0, i1) pair.
    double m00 = 0.0;
    double m01 = 0.0;
    double m10 = 0.0;
    double m11 = 0.0;
    switch (op.kind) {
    case GateKind::RY: {
        const double c = std::cos(op.angle / 2.0);
        const double s = std::sin(op.angle / 2.0);
        m00 = c;
        m01 = -s;
        m10 = s;
        m11 = c;
        break;
    }
    case GateKind::H:
        m00 = m01 = m10 = kInvSqrt2;
        m11 = -kInvSqrt2;
        break;
    case GateKind::CNOT:
        for (std::size_t i = 0; i < n; ++i) {
            if ((i & tbit) == 0U && (i & cmask) == cmask) {
                std::swap(a[i], a[i | tbit]);
            }
        }
        return;
    case GateKind::PauliZ:
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if ((i & tbit) == 0U && (i & cmask) == cmask) {
            const Complex v0 = a[i];
            const Complex v1 = a[i | tbit];
            a[i] = m00 * v0 + m01 * v1;
            a[i | tbit] = m10 * v0 + m11 * v1;
        }
    }
}

void StateVector::apply(const GateOp &op) {
    validate(op);
    apply_unchecked(op);
}

void StateVector::apply(std::span<const GateOp> circuit) {
    for (const auto &op : circuit) {
        validate(op);
    }
    for (const auto &op : circuit) {
        apply_unchecked(op);
    }
}

void StateVector::apply_controlled(std::size_t control,
                                   std::span<const GateOp> circuit,
                                   bool adjoint_circuit) {
    if (control >= num_qubits_) {
        throw ValidationError("control qubit out of range");
    }
    const std::uint64_t cbit = std::uint64_t{1} << control;
    for (const auto &op : circuit) {
        if ((support_mask(op) & cbit) != 0U) {
            throw ValidationError("control qubit " + std::to_string(control) +
                                  " overlaps the controlled circuit");
        }
        validate(op);
    }
    auto run = [&](const GateOp &op) {
        GateOp c = adjoint_circuit ? adjoint(op) : op;
        c.controls |= cbit;
        apply_unchecked(c);
    };
    if (adjoint_circuit) {
        std::for_each(circuit.rbegin(), circuit.rend(), run);
    } else {
        std::for_each(circuit.begin(), circuit.end(), run);
    }
}

double StateVector::expectation_z(std::size_t qubit) const {
    if (qubit >= num_qubits_) {
        throw ValidationError("qubit out of range");
    }
    const std::size_t bit = std::size_t{1} << qubit;
    double e = 0.0;
    for (std::size_t i = 0; i < amps_.size(); ++i) {
        const double p = std::norm(amps_[i]);
        e += (i & bit) != 0U ? -p : p;
    }
    return e;
}

double StateVector::probability_zero(std::size_t qubit) const {
    if (qubit >= num_qubits_) {
        throw ValidationError("qubit out of range");
    }
    const std::size_t bit = std::size_t{1} << qubit;
    double p0 = 0.0;
    for (std::size_t i = 0; i < amps_.size(); ++i) {
        if ((i & bit) == 0U) {
            p0 += std::norm(amps_[i]);
        }
    }
    return p0;
}

double StateVector::sample_z(std::size_t qubit, std::uint64_t shots,
                             std::uint64_t seed) const {
    if (shots == 0) {
        throw ValidationError("shots must be >= 1");
    }
    const double p0 = probability_zero(qubit);
    Rng rng(seed, Purpose::Shots);
    std::uint64_t zeros = 0;
    for (std::uint64_t s = 0; s < shots; ++s) {
        if (rng.uniform() < p0) {
            ++zeros;
        }
    }
    const auto ones = shots - zeros;
    return (static_cast<double>(zeros) - static_cast<double>(ones)) /
           static_cast<double>(shots);
}

void StateVector::reflect_about_zero() noexcept {
    for (std::size_t i = 1; i < amps_.size(); ++i) {
        amps_[i] = -amps_[i];
    }
}

Complex StateVector::inner(const StateVector &other) const {
    if (other.num_qubits_ != num_qubits_) {
        throw ValidationError("inner product of mismatched registers");
    }
    Complex s{0.0, 0.0};
    for (std::size_t i = 0; i < amps_.size(); ++i) {
        s += std::conj(amps_[i]) * other.amps_[i];
    }
    return s;
}

StateVector apply_gate(StateVector state, const GateOp &op) {
    state.apply(op);
    return state;
}

StateVector apply_controlled_circuit(StateVector state, std::size_t control,
                                     std::span<const GateOp> circuit,
                                     bool adjoint_circuit) {
    state.apply_controlled(control, circuit, adjoint_circuit);
    return state;
}

} // namespace qattn::sim
