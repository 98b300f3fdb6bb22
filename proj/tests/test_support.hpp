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

// Hand-rolled generators shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qattn/qcircuits.hpp"
#include "qattn/rng.hpp"

namespace qattn::testing {

inline qc::AnsatzParams random_ansatz(Rng &rng, std::size_t n, double lo = 0.0,
                                      double hi = 2.0 * std::numbers::pi) {
    qc::AnsatzParams p;
    p.angles.resize(n);
    for (auto &a : p.angles) {
        a = rng.uniform(lo, hi);
    }
    return p;
}

inline qc::AttentionCircuitSpec random_spec(Rng &rng, qc::Mode mode,
                                            std::size_t working_qubits = 6) {
    qc::AttentionCircuitSpec s;
    s.mode = mode;
    s.working_qubits = working_qubits;
    const std::size_t r = s.register_size();
    s.token_i = random_ansatz(rng, r);
    s.position_i = random_ansatz(rng, r);
    s.token_j = random_ansatz(rng, r);
    s.position_j = random_ansatz(rng, r);
    if (mode == qc::Mode::Conditioned) {
        s.property = random_ansatz(rng, r);
    }
    s.query = random_ansatz(rng, working_qubits);
    s.key = random_ansatz(rng, working_qubits);
    return s;
}

/// |got - want| / max(|want|, floor). The floor keeps derivatives that vanish
/// at the sample point from turning round-off into a huge ratio.
inline double rel_err(double got, double want, double floor = 1e-3) {
    return std::abs(got - want) / std::max(floor, std::abs(want));
}

} // namespace qattn::testing
