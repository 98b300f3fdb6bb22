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

#include <cstdint>
#include <random>
#include <string_view>

namespace qattn {

/// Random streams are keyed on (seed, purpose, index) so that the values a
/// consumer draws never depend on scheduling or thread count.
enum class Purpose : std::uint64_t {
    Init = 1,
    Split = 2,
    Shuffle = 3,
    Spsa = 4,
    Sample = 5,
    Shots = 6,
    Test = 7,
};

namespace detail {
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31U);
}
} // namespace detail

constexpr std::uint64_t stream_key(std::uint64_t seed, Purpose purpose,
                                   std::uint64_t index) noexcept {
    std::uint64_t k = detail::splitmix64(seed);
    k = detail::splitmix64(k ^ static_cast<std::uint64_t>(purpose));
    return detail::splitmix64(k ^ index);
}

/// FNV-1a, used to key per-tensor init streams by tensor name.
constexpr std::uint64_t name_hash(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Thin wrapper over mt19937_64 with portable conversions (the standard
/// distributions are implementation-defined, which would break cross-platform
/// reproducibility of sampled values).
class Rng {
  public:
    Rng(std::uint64_t seed, Purpose purpose, std::uint64_t index = 0)
        : engine_(stream_key(seed, purpose, index)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11U) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// +1 or -1 with equal probability.
    double rademacher() { return (engine_() >> 63U) != 0U ? 1.0 : -1.0; }

    /// Uniform integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
        std::uint64_t x = engine_();
        while (x >= limit) {
            x = engine_();
        }
        return x % n;
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace qattn
