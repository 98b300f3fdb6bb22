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
#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "qattn/error.hpp"
#include "qattn/grad.hpp"
#include "test_support.hpp"

namespace qattn::grad {
namespace {

using qc::ParamGroup;
using sim::GateOp;
constexpr double kPi = std::numbers::pi;

double ry_expectation(std::span<const double> x) {
    sim::StateVector s(1);
    s.apply(GateOp::ry(0, x[0]));
    return s.expectation_z(0);
}

/// Hadamard test of RY(x): <Z_0> = Re<0|RY(x)|0> = cos(x/2).
double hadamard_test_ry(std::span<const double> x) {
    sim::StateVector s(2);
    s.apply(GateOp::h(0));
    s.apply(GateOp{sim::GateKind::RY, 1, 1U, x[0]});
    s.apply(GateOp::h(0));
    return s.expectation_z(0);
}

TEST(ParameterShift, ClosedFormSingleRotation) {
    for (int k = 0; k < 20; ++k) {
        const double theta = -kPi + 2 * kPi * k / 19.0;
        const std::vector<double> x{theta};
        const auto r = parameter_shift_grad(ry_expectation, x);
        EXPECT_NEAR(r.gradient[0], -std::sin(theta), 1e-12);
        EXPECT_EQ(r.evaluations, 2U);
        EXPECT_EQ(r.method, Method::ParamShift);
    }
    EXPECT_NEAR(parameter_shift_grad(ry_expectation, std::vector<double>{kPi / 2}).gradient[0],
                -1.0, 1e-15);
    EXPECT_NEAR(parameter_shift_grad(ry_expectation, std::vector<double>{0.0}).gradient[0], 0.0,
                1e-15);
}

TEST(ParameterShift, EvaluationsAreTwoPerAngle) {
    auto f = [](std::span<const double> x) {
        sim::StateVector s(3);
        for (std::size_t q = 0; q < 3; ++q) {
            s.apply(GateOp::ry(q, x[q]));
        }
        s.apply(GateOp::cnot(0, 1));
        s.apply(GateOp::cnot(1, 2));
        return s.expectation_z(2);
    };
    const std::vector<double> x{0.3, 1.1, -0.4};
    const auto ps = parameter_shift_grad(f, x);
    EXPECT_EQ(ps.evaluations, 6U);
    const auto fd = finite_difference_grad(f, x);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_LE(testing::rel_err(ps.gradient[k], fd.gradient[k]), 1e-6);
    }
}

TEST(ParameterShift, ControlledRotationNeedsFourTerms) {
    const ScalarFn f = hadamard_test_ry;
    for (int k = 0; k < 20; ++k) {
        const double theta = -kPi + 2 * kPi * k / 19.0;
        const std::vector<double> x{theta};
        const double want = -0.5 * std::sin(theta / 2);
        const auto four = controlled_shift_grad(f, x);
        EXPECT_NEAR(four.gradient[0], want, 1e-12);
        EXPECT_EQ(four.evaluations, 4U);
    }
    // Under interference the two-term rule is off by a factor sqrt(2).
    const std::vector<double> x{0.9};
    const double want = -0.5 * std::sin(0.45);
    EXPECT_NEAR(parameter_shift_grad(f, x).gradient[0], std::numbers::sqrt2 * want, 1e-12);
    EXPECT_GT(std::abs(parameter_shift_grad(f, x).gradient[0] - want), 1e-3);
}

TEST(ScoreGradient, MatchesFiniteDifferenceForEveryGroup) {
    Rng rng(31, Purpose::Test);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const auto mode = t % 2 == 0 ? qc::Mode::SequenceOnly : qc::Mode::Conditioned;
        const auto spec = testing::random_spec(rng, mode);
        std::vector<ParamGroup> groups{ParamGroup::TokenI, ParamGroup::PositionI,
                                       ParamGroup::TokenJ, ParamGroup::PositionJ,
                                       ParamGroup::Query,  ParamGroup::Key};
        if (mode == qc::Mode::Conditioned) {
            groups.push_back(ParamGroup::Property);
        }
        for (auto g : groups) {
            const auto exact = score_gradient(spec, g);
            auto f = [&](std::span<const double> x) {
                auto s = spec;
                qc::params_of(s, g).angles.assign(x.begin(), x.end());
                return qc::attention_score(s);
            };
            const auto fd = finite_difference_grad(f, qc::params_of(spec, g).angles, 1e-5);
            for (std::size_t k = 0; k < fd.gradient.size(); ++k) {
                worst = std::max(worst, testing::rel_err(exact.gradient[k], fd.gradient[k]));
            }
        }
    }
    EXPECT_LE(worst, 1e-5);
}

TEST(ScoreGradient, EvaluationCountFollowsOccurrences) {
    Rng rng(32, Purpose::Test);
    const auto spec = testing::random_spec(rng, qc::Mode::SequenceOnly);
    // theta_q: 6 uncontrolled + 6 controlled occurrences; theta_k: 6 controlled.
    EXPECT_EQ(score_gradient(spec, ParamGroup::Query).evaluations, 6U * 2 + 6U * 4);
    EXPECT_EQ(score_gradient(spec, ParamGroup::Key).evaluations, 6U * 4);
    EXPECT_THROW((void)score_gradient(spec, ParamGroup::Property), ValidationError);
}

TEST(Spsa, QuadraticSymmetricDifferenceIsExact) {
    auto f = [](std::span<const double> x) { return x[0] * x[0]; };
    const std::vector<double> x{1.0};
    const std::vector<double> delta{1.0};
    const auto r = spsa_grad(f, x, 0.01, delta);
    EXPECT_NEAR(r.gradient[0], 2.0, 1e-12);
    EXPECT_EQ(r.evaluations, 2U);
    EXPECT_EQ(r.method, Method::Spsa);
}

TEST(Spsa, ExactlyTwoEvaluationsRegardlessOfDimension) {
    for (std::size_t n : {1U, 7U, 300U}) {
        int calls = 0;
        auto f = [&calls](std::span<const double> x) {
            ++calls;
            double s = 0.0;
            for (double v : x) {
                s += std::sin(v);
            }
            return s;
        };
        const std::vector<double> x(n, 0.25);
        const auto r = spsa_grad(f, x, 0.01, 9, 3);
        EXPECT_EQ(calls, 2);
        EXPECT_EQ(r.evaluations, 2U);
        EXPECT_EQ(r.gradient.size(), n);
    }
}

TEST(Spsa, LinearLossDirectionalDerivativeExactPerDraw) {
    const std::vector<double> g{0.5, -1.25, 2.0};
    auto f = [&g](std::span<const double> x) {
        return 3.0 + g[0] * x[0] + g[1] * x[1] + g[2] * x[2];
    };
    const std::vector<double> x{0.1, -0.2, 0.3};
    for (std::uint64_t draw = 0; draw < 100; ++draw) {
        const auto delta = spsa_direction(3, 5, draw);
        const auto r = spsa_grad(f, x, 0.01, 5, draw);
        const double directional = g[0] * delta[0] + g[1] * delta[1] + g[2] * delta[2];
        for (std::size_t k = 0; k < 3; ++k) {
            EXPECT_NEAR(r.gradient[k] * delta[k], directional, 1e-12);
        }
    }
    // Averaged over all 2^3 sign patterns the estimate is g itself.
    std::vector<double> mean(3, 0.0);
    for (int mask = 0; mask < 8; ++mask) {
        std::vector<double> delta(3);
        for (int k = 0; k < 3; ++k) {
            delta[k] = ((mask >> k) & 1) != 0 ? 1.0 : -1.0;
        }
        const auto r = spsa_grad(f, x, 0.01, delta);
        for (std::size_t k = 0; k < 3; ++k) {
            mean[k] += r.gradient[k] / 8.0;
        }
    }
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_NEAR(mean[k], g[k], 1e-12);
    }
}

TEST(Spsa, MonteCarloMeanApproachesGradient) {
    auto f = [](std::span<const double> x) {
        return x[0] * x[0] + 3.0 * x[0] * x[1] + 2.0 * x[1] * x[1];
    };
    const std::vector<double> x{0.7, -0.2};
    const std::vector<double> g{2 * 0.7 + 3 * -0.2, 3 * 0.7 + 4 * -0.2};
    std::vector<double> mean(2, 0.0);
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
        const auto r = spsa_grad(f, x, 0.01, 0, static_cast<std::uint64_t>(d));
        mean[0] += r.gradient[0] / draws;
        mean[1] += r.gradient[1] / draws;
    }
    const double err = std::hypot(mean[0] - g[0], mean[1] - g[1]);
    EXPECT_LE(err / std::hypot(g[0], g[1]), 0.02);
}

TEST(Spsa, RejectsBadArguments) {
    auto f = [](std::span<const double>) { return 0.0; };
    const std::vector<double> x{1.0};
    EXPECT_THROW((void)spsa_grad(f, x, 0.0, 1), ValidationError);
    EXPECT_THROW((void)spsa_grad(f, x, 0.01, std::vector<double>{0.5}), ValidationError);
}

TEST(Clip, ScalesDownOnlyAboveBound) {
    std::vector<double> g{6.0, 8.0};
    EXPECT_DOUBLE_EQ(clip_by_norm(g, 1.0), 10.0);
    EXPECT_NEAR(std::hypot(g[0], g[1]), 1.0, 1e-15);
    const auto once = g;
    clip_by_norm(g, 1.0);
    EXPECT_EQ(g, once);
    std::vector<double> small{0.1, 0.2};
    clip_by_norm(small, 1.0);
    EXPECT_EQ(small, (std::vector<double>{0.1, 0.2}));
}

TEST(AdamW, ZeroGradientZeroDecayLeavesParams) {
    AdamWConfig cfg;
    cfg.weight_decay = 0.0;
    AdamW opt(cfg);
    std::vector<double> p{1.0, -2.0};
    const std::vector<double> g{0.0, 0.0};
    ASSERT_TRUE(opt.step(std::vector<TensorSlot>{{"w", p, g}}));
    EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
    EXPECT_EQ(opt.step_count(), 1U);
}

TEST(AdamW, HandComputedFirstStep) {
    AdamW opt;
    std::vector<double> p{1.0};
    const std::vector<double> g{1.0};
    ASSERT_TRUE(opt.step(std::vector<TensorSlot>{{"w", p, g}}));
    // Decay: 1 - 0.005 * 0.1; m_hat = v_hat = 1 after bias correction.
    const double want = (1.0 - 0.005 * 0.1) - 0.005 * 1.0 / (1.0 + 1e-8);
    EXPECT_NEAR(p[0], want, 1e-12);
}

TEST(AdamW, ClipsEachTensorBeforeMoments) {
    AdamW opt;
    std::vector<double> a{0.0, 0.0};
    std::vector<double> b{0.0};
    const std::vector<double> ga{6.0, 8.0};
    const std::vector<double> gb{0.5};
    ASSERT_TRUE(opt.step(std::vector<TensorSlot>{{"a", a, ga}, {"b", b, gb}}));
    const auto &ma = opt.moments().at("a").m;
    EXPECT_NEAR(ma[0], 0.1 * 0.6, 1e-15);
    EXPECT_NEAR(ma[1], 0.1 * 0.8, 1e-15);
    EXPECT_NEAR(opt.moments().at("b").m[0], 0.1 * 0.5, 1e-15);
}

TEST(AdamW, NonFiniteGradientSkipsStep) {
    AdamW opt;
    std::vector<double> p{1.0, 2.0};
    const std::vector<double> g{0.1, std::numeric_limits<double>::quiet_NaN()};
    EXPECT_FALSE(opt.step(std::vector<TensorSlot>{{"w", p, g}}));
    EXPECT_EQ(p, (std::vector<double>{1.0, 2.0}));
    EXPECT_EQ(opt.step_count(), 0U);
    const std::vector<double> bad_shape{1.0};
    EXPECT_THROW((void)opt.step(std::vector<TensorSlot>{{"w", p, bad_shape}}), ValidationError);
}

} // namespace
} // namespace qattn::grad
