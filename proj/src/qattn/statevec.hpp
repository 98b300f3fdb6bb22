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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qattn::sim {

using Complex = std::complex<double>;

enum class GateKind : std::uint8_t { RY, CNOT, H, PauliZ };

/**
 * @brief A single gate, optionally conditioned on a set of control qubits.
 *
 * Controls are a bitmask over qubit indices. CNOT is an X on `target`
 * conditioned on at least one control; wrapping a CNOT in a controlled
 * circuit simply adds the outer control to the mask (Toffoli).
 */
struct GateOp {
    GateKind kind = GateKind::H;
    std::size_t target = 0;
    std::uint64_t controls = 0;
    double angle = 0.0; ///< radians, RY only

    static GateOp ry(std::size_t q, double theta) {
        return {GateKind::RY, q, 0, theta};
    }
    static GateOp cnot(std::size_t control, std::size_t target) {
        return {GateKind::CNOT, target, std::uint64_t{1} << control, 0.0};
    }
    static GateOp h(std::size_t q) { return {GateKind::H, q, 0, 0.0}; }
    static GateOp z(std::size_t q) { return {GateKind::PauliZ, q, 0, 0.0}; }

    [[nodiscard]] bool has_control(std::size_t q) const noexcept {
        return q < 64 && ((controls >> q) & 1U) != 0U;
    }

    friend bool operator==(const GateOp &, const GateOp &) = default;
};

using Circuit = std::vector<GateOp>;

/// Inverse gate. H, X and Z are self-inverse; RY(t)^dagger = RY(-t).
GateOp adjoint(const GateOp &op);
/// Inverse circuit: reversed order, each gate inverted.
Circuit adjoint(std::span<const GateOp> circuit);

/// Indices of all qubits a gate touches (target plus controls) as a mask.
std::uint64_t support_mask(const GateOp &op);

/**
 * @brief Dense statevector over `num_qubits` qubits.
 *
 * Qubit 0 is the least-significant bit of the basis-state index.
 */
class StateVector {
  public:
    static constexpr std::size_t kMaxQubits = 24;

    /// |0...0>. Throws ResourceError outside [1, kMaxQubits].
    explicit StateVector(std::size_t num_qubits);

    [[nodiscard]] std::size_t num_qubits() const noexcept { return num_qubits_; }
    [[nodiscard]] std::size_t size() const noexcept { return amps_.size(); }
    [[nodiscard]] std::span<const Complex> amplitudes() const noexcept {
        return amps_;
    }
    [[nodiscard]] std::span<Complex> amplitudes() noexcept { return amps_; }

    [[nodiscard]] double norm_squared() const noexcept;

    /// Reset to |0...0> without reallocating.
    void reset() noexcept;

    void apply(const GateOp &op);
    void apply(std::span<const GateOp> circuit);

    /// Apply `circuit` (or its adjoint) on the control=|1> subspace only.
    void apply_controlled(std::size_t control, std::span<const GateOp> circuit,
                          bool adjoint_circuit = false);

    /// Exact <Z_q>.
    [[nodiscard]] double expectation_z(std::size_t qubit) const;
    /// Probability that `qubit` measures 0.
    [[nodiscard]] double probability_zero(std::size_t qubit) const;

    /// Shot-based estimate of <Z_q>: (n0 - n1) / shots. Deterministic in seed.
    [[nodiscard]] double sample_z(std::size_t qubit, std::uint64_t shots,
                                  std::uint64_t seed) const;

    /// 2|0><0| - I on the full register.
    void reflect_about_zero() noexcept;

    /// <this|other>.
    [[nodiscard]] Complex inner(const StateVector &other) const;

  private:
    void validate(const GateOp &op) const;
    void apply_unchecked(const GateOp &op) noexcept;

    std::size_t num_qubits_;
    std::vector<Complex> amps_;
};

/// Value-semantics conveniences mirroring the member functions.
StateVector apply_gate(StateVector state, const GateOp &op);
StateVector apply_controlled_circuit(StateVector state, std::size_t control,
                                     std::span<const GateOp> circuit,
                                     bool adjoint_circuit);

} // namespace qattn::sim
