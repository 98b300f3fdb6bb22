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
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qattn/qcircuits.hpp"

namespace qattn::grad {

enum class Method : std::uint8_t { ParamShift, Spsa, ReverseMode, FiniteDiff };

using ScalarFn = std::function<double(std::span<const double>)>;

/// A flat gradient plus the number of function (or circuit) evaluations
/// spent producing it.
struct GradReport {
    Method method = Method::FiniteDiff;
    std::vector<double> gradient;
    std::size_t evaluations = 0;
};

/// Two-term shift rule: g_k = (f(x + pi/2 e_k) - f(x - pi/2 e_k)) / 2.
/// Exact when every x_k enters exactly one uncontrolled RY.
GradReport parameter_shift_grad(const ScalarFn &f, std::span<const double> theta);

/// Four-term rule for parameters that each enter exactly one singly
/// controlled RY (shifts +-pi/2 and +-3pi/2).
GradReport controlled_shift_grad(const ScalarFn &f, std::span<const double> theta);

/// Central differences with step h.
GradReport finite_difference_grad(const ScalarFn &f, std::span<const double> x,
                                  double h = 1e-5);

/// SPSA with an explicit perturbation direction (entries +-1).
GradReport spsa_grad(const ScalarFn &f, std::span<const double> x, double eps,
                     std::span<const double> delta);

/// SPSA with a Rademacher direction drawn from the (seed, Spsa, index) stream.
GradReport spsa_grad(const ScalarFn &f, std::span<const double> x, double eps,
                     std::uint64_t seed, std::uint64_t index = 0);

/// The Rademacher direction `spsa_grad(f, x, eps, seed, index)` uses.
std::vector<double> spsa_direction(std::size_t n, std::uint64_t seed, std::uint64_t index);

/**
 * @brief Exact gradient of attention_score with respect to one parameter group.
 *
 * Each rotation drawn from the group is shifted on its own: uncontrolled
 * occurrences use the two-term rule, ancilla-controlled ones the four-term
 * rule; contributions are summed with the occurrence's chain-rule sign.
 */
GradReport score_gradient(const qc::AttentionCircuitSpec &spec, qc::ParamGroup group);

/// Scales `g` in place to L2 norm at most `max_norm`; returns the norm before
/// clipping.
double clip_by_norm(std::span<double> g, double max_norm);

struct AdamWConfig {
    double lr = 0.005;
    double weight_decay = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// Per-tensor L2 bound applied before the moment update; <= 0 disables.
    double clip_norm = 1.0;
};

/// One trainable tensor and its gradient, matched across steps by name.
struct TensorSlot {
    std::string name;
    std::span<double> values;
    std::span<const double> grad;
};

/// AdamW with bias correction and decoupled weight decay.
class AdamW {
  public:
    explicit AdamW(AdamWConfig config = {}) : config_(config) {}

    /// Clips, updates moments and parameters. A non-finite gradient anywhere
    /// skips the whole step (logged) and returns false.
    bool step(std::span<const TensorSlot> slots);

    [[nodiscard]] std::uint64_t step_count() const noexcept { return step_; }
    [[nodiscard]] const AdamWConfig &config() const noexcept { return config_; }

    struct Moments {
        std::vector<double> m;
        std::vector<double> v;
    };
    [[nodiscard]] const std::map<std::string, Moments> &moments() const noexcept {
        return moments_;
    }

  private:
    AdamWConfig config_;
    std::uint64_t step_ = 0;
    std::map<std::string, Moments> moments_;
};

} // namespace qattn::grad
