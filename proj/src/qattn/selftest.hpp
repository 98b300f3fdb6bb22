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
#include <string>
#include <vector>

namespace qattn::selftest {

struct Options {
    std::uint64_t seed = 1;
    /// Added to every simulated score before it is checked; nonzero values
    /// exist only to prove the suites can fail.
    double score_perturbation = 0.0;
};

struct SuiteResult {
    std::string name;
    std::size_t cases = 0;
    std::size_t failures = 0;
    /// Invariant and values of the first failing case; empty on success.
    std::string first_failure;

    [[nodiscard]] bool passed() const noexcept { return failures == 0; }
};

/**
 * @brief Built-in invariant suites over random instances.
 *
 * oracle-equivalence: simulated score vs closed-form inner product, both
 * modes, 6 working qubits. self-score: identical query/key and positions
 * give score 1. parameter-shift: exact score gradients vs central finite
 * differences. reverse-mode: tiny-model gradients vs finite differences.
 * amplification: amplified ancilla probability vs its closed form.
 */
std::vector<SuiteResult> run(const Options &options = {});

} // namespace qattn::selftest
