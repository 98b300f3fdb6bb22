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
#include "qattn/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qattn/grad.hpp"
#include "qattn/model.hpp"
#include "qattn/qcircuits.hpp"
#include "qattn/rng.hpp"

namespace qattn::selftest {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

qc::AnsatzParams random_ansatz(Rng &rng, std::size_t n) {
    qc::AnsatzParams p;
    for (std::size_t k = 0; k < n; ++k) {
        p.angles.push_back(rng.uniform(0.0, kTwoPi));
    }
    return p;
}

qc::AttentionCircuitSpec random_spec(Rng &rng, qc::Mode mode) {
    qc::AttentionCircuitSpec s;
    s.mode = mode;
    s.working_qubits = 6;
    const std::size_t r = s.register_size();
    s.token_i = random_ansatz(rng, r);
    s.position_i = random_ansatz(rng, r);
    s.token_j = random_ansatz(rng, r);
    s.position_j = random_ansatz(rng, r);
    if (mode == qc::Mode::Conditioned) {
        s.property = random_ansatz(rng, r);
    }
    s.query = random_ansatz(rng, 6);
    s.key = random_ansatz(rng, 6);
    return s;
}

qc::Mode mode_of(std::size_t t) {
    return t % 2 == 0 ? qc::Mode::SequenceOnly : qc::Mode::Conditioned;
}

/// Records one case; keeps the first failure message.
void check(SuiteResult &r, bool ok, const std::string &invariant, double got, double want) {
    ++r.cases;
    if (ok) {
        return;
    }
    if (r.failures++ == 0) {
        std::ostringstream m;
        m.precision(17);
        m << invariant << " (case " << r.cases - 1 << ": got " << got << ", want " << want << ")";
        r.first_failure = m.str();
    }
}

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1e-3, std::abs(want));
}

SuiteResult oracle_suite(const Options &o) {
    SuiteResult r;
    r.name = "oracle-equivalence";
    Rng rng(o.seed, Purpose::Test, 1);
    for (std::size_t t = 0; t < 200; ++t) {
        const auto spec = random_spec(rng, mode_of(t));
        const double got = qc::attention_score(spec) + o.score_perturbation;
        const double want = qc::oracle_inner_product(spec);
        check(r, std::abs(got - want) <= 1e-10 && std::abs(got) <= 1.0,
              "|score - oracle| <= 1e-10 and |score| <= 1", got, want);
    }
    return r;
}

SuiteResult self_score_suite(const Options &o) {
    SuiteResult r;
    r.name = "self-score";
    Rng rng(o.seed, Purpose::Test, 2);
    for (std::size_t t = 0; t < 50; ++t) {
        auto spec = random_spec(rng, mode_of(t));
        spec.token_j = spec.token_i;
        spec.position_j = spec.position_i;
        spec.key = spec.query;
        const double got = qc::attention_score(spec) + o.score_perturbation;
        check(r, std::abs(got - 1.0) <= 1e-12, "identical query and key score 1 within 1e-12", got,
              1.0);
    }
    return r;
}

SuiteResult shift_suite(const Options &o) {
    SuiteResult r;
    r.name = "parameter-shift";
    Rng rng(o.seed, Purpose::Test, 3);
    using G = qc::ParamGroup;
    for (std::size_t t = 0; t < 10; ++t) {
        const auto spec = random_spec(rng, mode_of(t));
        std::vector<G> groups{G::TokenI, G::PositionI, G::TokenJ, G::PositionJ, G::Query, G::Key};
        if (spec.mode == qc::Mode::Conditioned) {
            groups.push_back(G::Property);
        }
        for (G g : groups) {
            const auto exact = grad::score_gradient(spec, g);
            const grad::ScalarFn f = [&](std::span<const double> x) {
                auto s = spec;
                qc::params_of(s, g).angles.assign(x.begin(), x.end());
                return qc::attention_score(s) + o.score_perturbation;
            };
            const auto fd = grad::finite_difference_grad(f, qc::params_of(spec, g).angles, 1e-5);
            for (std::size_t k = 0; k < fd.gradient.size(); ++k) {
                check(r, rel_err(exact.gradient[k], fd.gradient[k]) <= 1e-5,
                      "shift-rule gradient vs finite difference, relative error <= 1e-5",
                      exact.gradient[k], fd.gradient[k]);
            }
        }
    }
    return r;
}

SuiteResult reverse_suite(const Options &o) {
    SuiteResult r;
    r.name = "reverse-mode";
    Rng rng(o.seed, Purpose::Test, 4);
    for (auto v : {model::Variant::Quantum, model::Variant::ClassicalEq,
                   model::Variant::Classical}) {
        model::ModelConfig c;
        c.variant = v;
        c.conditioned = true;
        c.working_qubits = 3;
        c.max_seq_len = 6;
        c.d_value = 3;
        c.seed = o.seed;
        model::Model m(c, smiles::Vocabulary::qm9());
        std::vector<int> row{smiles::Vocabulary::kSos};
        for (int k = 0; k < 3; ++k) {
            row.push_back(static_cast<int>(3 + rng.below(30)));
        }
        row.push_back(smiles::Vocabulary::kEos);
        model::PropertyVector props{};
        for (auto &p : props) {
            p = rng.uniform(-1.0, 1.0);
        }
        auto g = m.zero_gradients();
        (void)m.backward_row(row, &props, &g, 1.0);
        for (std::size_t t = 0; t < m.parameters().size(); ++t) {
            auto &p = m.parameters()[t];
            if (m.is_circuit_parameter(p)) {
                continue;
            }
            for (std::size_t k = 0; k < p.size(); k += 1 + p.size() / 5) {
                const double keep = p.data[k];
                p.data[k] = keep + 1e-5;
                const double up = m.backward_row(row, &props, nullptr, 0.0).loss_sum;
                p.data[k] = keep - 1e-5;
                const double down = m.backward_row(row, &props, nullptr, 0.0).loss_sum;
                p.data[k] = keep;
                const double fd = (up - down) / 2e-5;
                check(r, rel_err(g[t][k], fd) <= 1e-5,
                      p.name + " reverse mode vs finite difference, relative error <= 1e-5",
                      g[t][k], fd);
            }
        }
    }
    return r;
}

SuiteResult amplification_suite(const Options &o) {
    SuiteResult r;
    r.name = "amplification";
    Rng rng(o.seed, Purpose::Test, 5);
    for (std::size_t t = 0; t < 10; ++t) {
        const auto spec = random_spec(rng, mode_of(t));
        const double p0 = (1.0 + qc::oracle_inner_product(spec)) / 2.0;
        for (int m = 0; m <= 3; ++m) {
            const double got = qc::amplitude_amplification_demo(spec, m);
            const double want = qc::amplified_probability(p0, m);
            check(r, std::abs(got - want) <= 1e-9,
                  "amplified p0 = sin^2((2m+1) asin sqrt p0) within 1e-9", got, want);
        }
    }
    return r;
}

} // namespace

std::vector<SuiteResult> run(const Options &options) {
    return {oracle_suite(options), self_score_suite(options), shift_suite(options),
            reverse_suite(options), amplification_suite(options)};
}

} // namespace qattn::selftest
