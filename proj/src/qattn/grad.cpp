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
#include "qattn/grad.hpp"

#include <cmath>
#include <numbers>

#include <spdlog/spdlog.h>

#include "qattn/error.hpp"
#include "qattn/rng.hpp"

namespace qattn::grad {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kSqrt2 = std::numbers::sqrt2;
// Four-term coefficients for a rotation with generator eigenvalues
// {0, +-1/2}: g = c_plus (f(+pi/2) - f(-pi/2)) - c_minus (f(+3pi/2) - f(-3pi/2)).
constexpr double kCPlus = (kSqrt2 + 1.0) / (4.0 * kSqrt2);
constexpr double kCMinus = (kSqrt2 - 1.0) / (4.0 * kSqrt2);

double shifted(const ScalarFn &f, std::vector<double> &x, std::size_t k, double s) {
    const double orig = x[k];
    x[k] = orig + s;
    const double v = f(x);
    x[k] = orig;
    return v;
}

} // namespace

GradReport parameter_shift_grad(const ScalarFn &f, std::span<const double> theta) {
    GradReport r{Method::ParamShift, std::vector<double>(theta.size()), 0};
    std::vector<double> x(theta.begin(), theta.end());
    for (std::size_t k = 0; k < x.size(); ++k) {
        r.gradient[k] = 0.5 * (shifted(f, x, k, kHalfPi) - shifted(f, x, k, -kHalfPi));
        r.evaluations += 2;
    }
    return r;
}

GradReport controlled_shift_grad(const ScalarFn &f, std::span<const double> theta) {
    GradReport r{Method::ParamShift, std::vector<double>(theta.size()), 0};
    std::vector<double> x(theta.begin(), theta.end());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double near = shifted(f, x, k, kHalfPi) - shifted(f, x, k, -kHalfPi);
        const double far = shifted(f, x, k, 3 * kHalfPi) - shifted(f, x, k, -3 * kHalfPi);
        r.gradient[k] = kCPlus * near - kCMinus * far;
        r.evaluations += 4;
    }
    return r;
}

GradReport finite_difference_grad(const ScalarFn &f, std::span<const double> x, double h) {
    QATTN_REQUIRE(h > 0.0, "finite-difference step must be positive");
    GradReport r{Method::FiniteDiff, std::vector<double>(x.size()), 0};
    std::vector<double> p(x.begin(), x.end());
    for (std::size_t k = 0; k < p.size(); ++k) {
        r.gradient[k] = (shifted(f, p, k, h) - shifted(f, p, k, -h)) / (2.0 * h);
        r.evaluations += 2;
    }
    return r;
}

GradReport spsa_grad(const ScalarFn &f, std::span<const double> x, double eps,
                     std::span<const double> delta) {
    QATTN_REQUIRE(eps > 0.0, "SPSA epsilon must be positive");
    QATTN_REQUIRE(delta.size() == x.size(), "SPSA direction has the wrong length");
    std::vector<double> plus(x.begin(), x.end());
    std::vector<double> minus(x.begin(), x.end());
    for (std::size_t k = 0; k < x.size(); ++k) {
        QATTN_REQUIRE(delta[k] == 1.0 || delta[k] == -1.0, "SPSA direction must be +-1");
        plus[k] += eps * delta[k];
        minus[k] -= eps * delta[k];
    }
    const double diff = f(plus) - f(minus);
    GradReport r{Method::Spsa, std::vector<double>(x.size()), 2};
    for (std::size_t k = 0; k < x.size(); ++k) {
        r.gradient[k] = diff / (2.0 * eps * delta[k]);
    }
    return r;
}

std::vector<double> spsa_direction(std::size_t n, std::uint64_t seed, std::uint64_t index) {
    Rng rng(seed, Purpose::Spsa, index);
    std::vector<double> d(n);
    for (auto &v : d) {
        v = rng.rademacher();
    }
    return d;
}

GradReport spsa_grad(const ScalarFn &f, std::span<const double> x, double eps,
                     std::uint64_t seed, std::uint64_t index) {
    const auto delta = spsa_direction(x.size(), seed, index);
    return spsa_grad(f, x, eps, delta);
}

GradReport score_gradient(const qc::AttentionCircuitSpec &spec, qc::ParamGroup group) {
    const qc::TaggedCircuit circuit = qc::build_score_circuit(spec);
    const std::size_t n = qc::params_of(spec, group).size();
    GradReport r{Method::ParamShift, std::vector<double>(n, 0.0), 0};

    sim::StateVector psi(spec.working_qubits + 1);
    sim::Circuit work = circuit.gates;
    auto eval_shifted = [&](std::size_t g, double s) {
        work[g].angle = circuit.gates[g].angle + s;
        psi.reset();
        psi.apply(work);
        work[g].angle = circuit.gates[g].angle;
        ++r.evaluations;
        return psi.expectation_z(spec.ancilla());
    };

    for (std::size_t g = 0; g < circuit.gates.size(); ++g) {
        const auto &tag = circuit.tags[g];
        if (tag.group != group) {
            continue;
        }
        double d = 0.0;
        if (circuit.gates[g].controls == 0U) {
            d = 0.5 * (eval_shifted(g, kHalfPi) - eval_shifted(g, -kHalfPi));
        } else {
            const double near = eval_shifted(g, kHalfPi) - eval_shifted(g, -kHalfPi);
            const double far = eval_shifted(g, 3 * kHalfPi) - eval_shifted(g, -3 * kHalfPi);
            d = kCPlus * near - kCMinus * far;
        }
        r.gradient[tag.index] += tag.sign * d;
    }
    return r;
}

double clip_by_norm(std::span<double> g, double max_norm) {
    double sq = 0.0;
    for (double v : g) {
        sq += v * v;
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (double &v : g) {
            v *= scale;
        }
    }
    return norm;
}

bool AdamW::step(std::span<const TensorSlot> slots) {
    for (const auto &s : slots) {
        QATTN_REQUIRE(s.values.size() == s.grad.size(),
                      "gradient shape does not match tensor '" + s.name + "'");
        for (double v : s.grad) {
            if (!std::isfinite(v)) {
                spdlog::warn("non-finite gradient in '{}'; skipping step {}", s.name,
                             step_ + 1);
                return false;
            }
        }
    }
    ++step_;
    const double t = static_cast<double>(step_);
    const double bc1 = 1.0 - std::pow(config_.beta1, t);
    const double bc2 = 1.0 - std::pow(config_.beta2, t);
    std::vector<double> g;
    for (const auto &s : slots) {
        g.assign(s.grad.begin(), s.grad.end());
        clip_by_norm(g, config_.clip_norm);
        auto &mom = moments_[s.name];
        if (mom.m.size() != g.size()) {
            mom.m.assign(g.size(), 0.0);
            mom.v.assign(g.size(), 0.0);
        }
        for (std::size_t k = 0; k < g.size(); ++k) {
            double &p = s.values[k];
            p -= config_.lr * config_.weight_decay * p;
            mom.m[k] = config_.beta1 * mom.m[k] + (1.0 - config_.beta1) * g[k];
            mom.v[k] = config_.beta2 * mom.v[k] + (1.0 - config_.beta2) * g[k] * g[k];
            const double mhat = mom.m[k] / bc1;
            const double vhat = mom.v[k] / bc2;
            p -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
        }
    }
    return true;
}

} // namespace qattn::grad
