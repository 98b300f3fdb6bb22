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
#include "qattn/model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "qattn/error.hpp"
#include "qattn/parallel.hpp"
#include "qattn/rng.hpp"

namespace qattn::model {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

constexpr std::string_view kTokenEmbed = "token_embed";
constexpr std::string_view kPosEmbed = "pos_embed";
constexpr std::string_view kPropW = "prop_embed.weight";
constexpr std::string_view kPropB = "prop_embed.bias";
constexpr std::string_view kValueW = "value.weight";
constexpr std::string_view kValueB = "value.bias";
constexpr std::string_view kHeadW = "head.weight";
constexpr std::string_view kHeadB = "head.bias";
constexpr std::string_view kQkToken = "qk_token";
constexpr std::string_view kQkPos = "qk_pos";
constexpr std::string_view kQkPropW = "qk_prop.weight";
constexpr std::string_view kQkPropB = "qk_prop.bias";
constexpr std::string_view kThetaQ = "theta_q";
constexpr std::string_view kThetaK = "theta_k";
constexpr std::string_view kQueryW = "query.weight";
constexpr std::string_view kKeyW = "key.weight";

constexpr std::string_view kPropMean = "prop_mean";
constexpr std::string_view kPropStd = "prop_std";
constexpr std::string_view kAngleMin = "angle_min";
constexpr std::string_view kAngleMax = "angle_max";

constexpr std::array<char, 8> kMagic = {'Q', 'A', 'T', 'T', 'N', 'C', 'K', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;

ConstMap view(const Tensor &t) {
    return {t.data.data(), static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols)};
}

MutMap view(std::vector<double> &g, const Tensor &t) {
    return {g.data(), static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols)};
}

struct TensorPlan {
    std::string_view name;
    std::size_t rows;
    std::size_t cols;
    double lo;
    double hi;
};

TensorPlan uniform(std::string_view name, std::size_t rows, std::size_t cols, double lo,
                   double hi) {
    return {name, rows, cols, lo, hi};
}

/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)), the usual fan-in-scaled uniform.
TensorPlan fan_in(std::string_view name, std::size_t rows, std::size_t cols,
                  std::size_t fan) {
    const double b = 1.0 / std::sqrt(static_cast<double>(fan));
    return {name, rows, cols, -b, b};
}

nlohmann::json config_json(const ModelConfig &c, const smiles::Vocabulary &vocab) {
    return {{"variant", std::string(variant_name(c.variant))},
            {"conditioned", c.conditioned},
            {"working_qubits", c.working_qubits},
            {"vocab_size", c.vocab_size},
            {"max_seq_len", c.max_seq_len},
            {"d_value", c.d_value},
            {"seed", c.seed},
            {"vocabulary", vocab.tokens()}};
}

void put_u32(std::ostream &out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.put(static_cast<char>((v >> (8 * i)) & 0xFFU));
    }
}

void put_u64(std::ostream &out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.put(static_cast<char>((v >> (8 * i)) & 0xFFU));
    }
}

std::uint64_t get_le(std::istream &in, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
        const int c = in.get();
        if (c == std::char_traits<char>::eof()) {
            throw DataError("truncated checkpoint");
        }
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return v;
}

std::string get_bytes(std::istream &in, std::uint64_t n) {
    if (n > (std::uint64_t{1} << 32)) {
        throw DataError("corrupt checkpoint length");
    }
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::uint64_t>(in.gcount()) != n) {
        throw DataError("truncated checkpoint");
    }
    return s;
}

/// Row softmax of x / temperature with the max subtracted.
std::vector<double> softmax(std::span<const double> x, double temperature = 1.0) {
    const double mx = *std::max_element(x.begin(), x.end());
    std::vector<double> p(x.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        p[i] = std::exp((x[i] - mx) / temperature);
        sum += p[i];
    }
    for (double &v : p) {
        v /= sum;
    }
    return p;
}

} // namespace

std::string_view variant_name(Variant v) noexcept {
    switch (v) {
    case Variant::Quantum:
        return "quantum";
    case Variant::ClassicalEq:
        return "classical-eq";
    case Variant::Classical:
        return "classical";
    }
    return "?";
}

Variant parse_variant(std::string_view name) {
    for (Variant v : {Variant::Quantum, Variant::ClassicalEq, Variant::Classical}) {
        if (variant_name(v) == name) {
            return v;
        }
    }
    throw ValidationError("unknown model variant '" + std::string(name) +
                          "' (expected quantum, classical-eq or classical)");
}

std::size_t ModelConfig::d_k() const noexcept {
    return variant == Variant::ClassicalEq ? reduced_qk_dim() : embed_dim();
}

void ModelConfig::validate() const {
    const std::size_t regs = conditioned ? 3 : 2;
    QATTN_REQUIRE(working_qubits >= regs && working_qubits <= 16,
                  "working_qubits must lie in [registers, 16]");
    QATTN_REQUIRE(working_qubits % regs == 0,
                  "working_qubits must split evenly into the circuit registers");
    QATTN_REQUIRE(vocab_size > static_cast<std::size_t>(smiles::Vocabulary::kEos) + 1,
                  "vocabulary needs at least one chemical token");
    QATTN_REQUIRE(max_seq_len >= 2, "max_seq_len must hold SOS and EOS");
    QATTN_REQUIRE(d_value >= 1, "d_value must be positive");
}

std::span<const int> Batch::row(std::size_t b) const {
    std::size_t n = 0;
    while (n < length && !is_pad(b, n)) {
        ++n;
    }
    return {ids.data() + b * length, n};
}

Batch make_batch(std::span<const std::vector<int>> rows,
                 std::span<const PropertyVector> properties) {
    QATTN_REQUIRE(!rows.empty(), "batch needs at least one row");
    QATTN_REQUIRE(properties.empty() || properties.size() == rows.size(),
                  "one property vector per row");
    Batch b;
    b.batch_size = rows.size();
    for (const auto &r : rows) {
        QATTN_REQUIRE(r.size() >= 2 && r.front() == smiles::Vocabulary::kSos &&
                          r.back() == smiles::Vocabulary::kEos,
                      "rows must start with SOS and end with EOS");
        b.length = std::max(b.length, r.size());
    }
    b.ids.assign(b.batch_size * b.length, smiles::Vocabulary::kPad);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(rows[i].begin(), rows[i].end(), b.ids.begin() + static_cast<long>(i * b.length));
    }
    b.properties.assign(properties.begin(), properties.end());
    return b;
}

std::vector<int> encode(const smiles::Vocabulary &vocab, std::string_view smiles) {
    std::vector<int> ids{smiles::Vocabulary::kSos};
    const auto body = vocab.tokenize(smiles);
    ids.insert(ids.end(), body.begin(), body.end());
    ids.push_back(smiles::Vocabulary::kEos);
    return ids;
}

std::vector<int> shifted_targets(const Batch &batch) {
    std::vector<int> t(batch.ids.size(), smiles::Vocabulary::kPad);
    for (std::size_t b = 0; b < batch.batch_size; ++b) {
        for (std::size_t i = 0; i + 1 < batch.length; ++i) {
            if (!batch.is_pad(b, i)) {
                t[b * batch.length + i] = batch.id(b, i + 1);
            }
        }
    }
    return t;
}

double cross_entropy(const Logits &logits, std::span<const int> targets) {
    QATTN_REQUIRE(targets.size() == logits.batch_size * logits.length,
                  "targets do not match logits shape");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t b = 0; b < logits.batch_size; ++b) {
        for (std::size_t i = 0; i < logits.length; ++i) {
            const int t = targets[b * logits.length + i];
            if (t == smiles::Vocabulary::kPad) {
                continue;
            }
            QATTN_REQUIRE(t >= 0 && static_cast<std::size_t>(t) < logits.vocab,
                          "target id outside vocabulary");
            const auto row = logits.at(b, i);
            const double mx = *std::max_element(row.begin(), row.end());
            double z = 0.0;
            for (double v : row) {
                z += std::exp(v - mx);
            }
            sum += std::log(z) + mx - row[static_cast<std::size_t>(t)];
            ++count;
        }
    }
    QATTN_REQUIRE(count > 0, "cross entropy over an all-pad batch");
    return sum / static_cast<double>(count);
}

std::size_t parameter_count_formula(const ModelConfig &c) {
    const std::size_t v = c.vocab_size;
    const std::size_t l = c.max_seq_len;
    const std::size_t d = c.embed_dim();
    const std::size_t dv = c.d_value;
    const std::size_t a = c.angle_dim();
    const std::size_t w = c.working_qubits;
    const std::size_t p = smiles::kNumProperties;
    std::size_t n = v * d + l * d + (d * dv + dv) + (dv * v + v);
    if (c.conditioned) {
        n += p * d + d;
    }
    switch (c.variant) {
    case Variant::Quantum:
        n += v * a + l * a + 2 * w + (c.conditioned ? p * a + a : 0);
        break;
    case Variant::ClassicalEq:
        n += v * a + l * a + 2 * a * c.reduced_qk_dim() + (c.conditioned ? p * a + a : 0);
        break;
    case Variant::Classical:
        n += 2 * d * d;
        break;
    }
    return n;
}

// --------------------------------------------------------------------- Model

struct Model::Cache {
    std::vector<double> pz;
    Matrix z;  // n x d
    Matrix v;  // n x d_value
    Matrix zq; // attention input (classical variants)
    Matrix q;
    Matrix k;
    attn::AttentionMatrix att; // full variant only
    Matrix w;                  // weights, n x n or 1 x n
    Matrix h;
    Matrix logits;
};

Model::Model(ModelConfig config, smiles::Vocabulary vocab)
    : config_(config), vocab_(std::move(vocab)) {
    config_.validate();
    QATTN_REQUIRE(vocab_.size() == config_.vocab_size,
                  "vocabulary size does not match the model configuration");
    init_tensors();
}

void Model::init_tensors() {
    const ModelConfig &c = config_;
    const std::size_t v = c.vocab_size;
    const std::size_t l = c.max_seq_len;
    const std::size_t d = c.embed_dim();
    const std::size_t dv = c.d_value;
    const std::size_t a = c.angle_dim();
    const std::size_t w = c.working_qubits;
    const std::size_t p = smiles::kNumProperties;
    const double pi = std::numbers::pi;

    std::vector<TensorPlan> plan{
        uniform(kTokenEmbed, v, d, -1.0, 1.0),
        uniform(kPosEmbed, l, d, -1.0, 1.0),
    };
    if (c.conditioned) {
        plan.push_back(fan_in(kPropW, p, d, p));
        plan.push_back(fan_in(kPropB, 1, d, p));
    }
    plan.push_back(fan_in(kValueW, d, dv, d));
    plan.push_back(fan_in(kValueB, 1, dv, d));
    plan.push_back(fan_in(kHeadW, dv, v, dv));
    plan.push_back(fan_in(kHeadB, 1, v, dv));
    if (c.variant != Variant::Classical) {
        plan.push_back(uniform(kQkToken, v, a, 0.0, pi));
        plan.push_back(uniform(kQkPos, l, a, 0.0, 0.0));
        if (c.conditioned) {
            plan.push_back(fan_in(kQkPropW, p, a, p));
            plan.push_back(fan_in(kQkPropB, 1, a, p));
        }
    }
    switch (c.variant) {
    case Variant::Quantum:
        plan.push_back(uniform(kThetaQ, 1, w, 0.0, pi));
        plan.push_back(uniform(kThetaK, 1, w, 0.0, pi));
        break;
    case Variant::ClassicalEq:
        plan.push_back(fan_in(kQueryW, a, c.reduced_qk_dim(), a));
        plan.push_back(fan_in(kKeyW, a, c.reduced_qk_dim(), a));
        break;
    case Variant::Classical:
        plan.push_back(fan_in(kQueryW, d, d, d));
        plan.push_back(fan_in(kKeyW, d, d, d));
        break;
    }

    params_.clear();
    for (const auto &tp : plan) {
        Tensor t{std::string(tp.name), tp.rows, tp.cols, std::vector<double>(tp.rows * tp.cols)};
        // Streams keyed by name: same-named tensors match across variants.
        Rng rng(c.seed, Purpose::Init, name_hash(tp.name));
        for (double &x : t.data) {
            x = tp.lo == tp.hi ? tp.lo : rng.uniform(tp.lo, tp.hi);
        }
        index_.emplace(t.name, params_.size());
        params_.push_back(std::move(t));
    }

    buffers_.clear();
    if (c.conditioned) {
        buffers_.push_back({std::string(kPropMean), 1, p, std::vector<double>(p, 0.0)});
        buffers_.push_back({std::string(kPropStd), 1, p, std::vector<double>(p, 1.0)});
        if (c.variant == Variant::Quantum) {
            buffers_.push_back({std::string(kAngleMin), 1, a, std::vector<double>(a, -1.0)});
            buffers_.push_back({std::string(kAngleMax), 1, a, std::vector<double>(a, 1.0)});
        }
    }
}

std::size_t Model::index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) {
        throw ValidationError("model has no tensor '" + std::string(name) + "'");
    }
    return it->second;
}

Tensor &Model::parameter(std::string_view name) { return params_[index_of(name)]; }
const Tensor &Model::parameter(std::string_view name) const { return params_[index_of(name)]; }

const Tensor *Model::find_parameter(std::string_view name) const {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? nullptr : &params_[it->second];
}

Tensor &Model::buffer(std::string_view name) {
    for (auto &b : buffers_) {
        if (b.name == name) {
            return b;
        }
    }
    throw ValidationError("model has no buffer '" + std::string(name) + "'");
}

const Tensor &Model::buffer(std::string_view name) const {
    return const_cast<Model *>(this)->buffer(name);
}

bool Model::is_circuit_parameter(const Tensor &t) const {
    if (config_.variant != Variant::Quantum) {
        return false;
    }
    return t.name == kQkToken || t.name == kQkPos || t.name == kQkPropW ||
           t.name == kQkPropB || t.name == kThetaQ || t.name == kThetaK;
}

ParameterCount Model::count_parameters() const {
    ParameterCount pc;
    for (const auto &t : params_) {
        pc.per_tensor.emplace_back(t.name, t.size());
        pc.total += t.size();
    }
    return pc;
}

void Model::set_property_normalization(const PropertyVector &mean, const PropertyVector &stddev) {
    QATTN_REQUIRE(config_.conditioned, "property normalization needs a conditioned model");
    Tensor &m = buffer(kPropMean);
    Tensor &s = buffer(kPropStd);
    for (std::size_t i = 0; i < smiles::kNumProperties; ++i) {
        m.data[i] = mean[i];
        s.data[i] = stddev[i] > 0.0 && std::isfinite(stddev[i]) ? stddev[i] : 1.0;
    }
}

std::vector<double> Model::normalized(const PropertyVector &raw) const {
    const Tensor &m = buffer(kPropMean);
    const Tensor &s = buffer(kPropStd);
    std::vector<double> z(smiles::kNumProperties);
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = (raw[i] - m.data[i]) / s.data[i];
    }
    return z;
}

namespace {

/// pz W + b for a 9 x k weight and 1 x k bias.
std::vector<double> project(const std::vector<double> &pz, const Tensor &w, const Tensor &b) {
    std::vector<double> out(b.data);
    for (std::size_t r = 0; r < w.rows; ++r) {
        for (std::size_t c = 0; c < w.cols; ++c) {
            out[c] += pz[r] * w.at(r, c);
        }
    }
    return out;
}

} // namespace

void Model::refresh_angle_range(std::span<const PropertyVector> properties) {
    if (!config_.conditioned || config_.variant != Variant::Quantum || properties.empty()) {
        return;
    }
    std::vector<std::vector<double>> proj;
    proj.reserve(properties.size());
    for (const auto &p : properties) {
        proj.push_back(project(normalized(p), parameter(kQkPropW), parameter(kQkPropB)));
    }
    const auto r = data::range_of(proj);
    buffer(kAngleMin).data = r.min;
    buffer(kAngleMax).data = r.max;
}

data::ScaledAngles Model::property_angles(const PropertyVector &raw) const {
    QATTN_REQUIRE(config_.conditioned && config_.variant == Variant::Quantum,
                  "property angles exist only for the conditioned quantum model");
    const auto proj = project(normalized(raw), parameter(kQkPropW), parameter(kQkPropB));
    return data::scale_to_angle(proj, {buffer(kAngleMin).data, buffer(kAngleMax).data});
}

void Model::forward_cache(std::span<const int> ids, const PropertyVector *properties, Cache &c,
                          bool full_attention) const {
    const ModelConfig &cfg = config_;
    const std::size_t n = ids.size();
    QATTN_REQUIRE(n >= 1, "forward needs at least one token");
    QATTN_REQUIRE(n <= cfg.max_seq_len, "sequence longer than max_seq_len");
    for (int id : ids) {
        QATTN_REQUIRE(id >= 0 && static_cast<std::size_t>(id) < cfg.vocab_size,
                      "token id outside vocabulary");
    }
    QATTN_REQUIRE(cfg.conditioned == (properties != nullptr),
                  cfg.conditioned ? "conditioned model needs a property vector"
                                  : "sequence-only model takes no property vector");
    const auto rows = static_cast<Eigen::Index>(n);
    const std::size_t d = cfg.embed_dim();

    if (properties != nullptr) {
        c.pz = normalized(*properties);
    }

    const Tensor &te = parameter(kTokenEmbed);
    const Tensor &pe = parameter(kPosEmbed);
    c.z.resize(rows, static_cast<Eigen::Index>(d));
    std::vector<double> prop_row;
    if (cfg.conditioned) {
        prop_row = project(c.pz, parameter(kPropW), parameter(kPropB));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto t = static_cast<std::size_t>(ids[i]);
        for (std::size_t j = 0; j < d; ++j) {
            c.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                te.at(t, j) + pe.at(i, j) + (cfg.conditioned ? prop_row[j] : 0.0);
        }
    }
    c.v = c.z * view(parameter(kValueW));
    c.v.rowwise() += view(parameter(kValueB)).row(0);

    const double sqrt_dk = std::sqrt(static_cast<double>(cfg.d_k()));
    if (cfg.variant == Variant::Quantum) {
        attn::QuantumAttentionInput in;
        in.working_qubits = cfg.working_qubits;
        const Tensor &qt = parameter(kQkToken);
        const Tensor &qp = parameter(kQkPos);
        const std::size_t a = cfg.angle_dim();
        for (std::size_t i = 0; i < n; ++i) {
            const auto t = static_cast<std::size_t>(ids[i]);
            in.tokens.push_back({{qt.data.begin() + static_cast<long>(t * a),
                                  qt.data.begin() + static_cast<long>((t + 1) * a)}});
            in.positions.push_back({{qp.data.begin() + static_cast<long>(i * a),
                                     qp.data.begin() + static_cast<long>((i + 1) * a)}});
        }
        in.query.angles = parameter(kThetaQ).data;
        in.key.angles = parameter(kThetaK).data;
        if (cfg.conditioned) {
            in.property = qc::AnsatzParams{property_angles(*properties).angles};
        }
        if (full_attention) {
            c.att = attn::quantum_attention_matrix(in, cfg.d_k());
            c.w = c.att.weights;
        } else {
            // Last row only: scores against every earlier position.
            Matrix s = Matrix::Zero(1, rows);
            if (n > 1) {
                qc::AttentionCircuitSpec spec;
                spec.mode = cfg.conditioned ? qc::Mode::Conditioned : qc::Mode::SequenceOnly;
                spec.working_qubits = cfg.working_qubits;
                spec.query = in.query;
                spec.key = in.key;
                spec.property = in.property;
                spec.token_i = in.tokens[n - 1];
                spec.position_i = in.positions[n - 1];
                for (std::size_t j = 0; j < n; ++j) {
                    spec.token_j = in.tokens[j];
                    spec.position_j = in.positions[j];
                    s(0, static_cast<Eigen::Index>(j)) = qc::attention_score(spec) * sqrt_dk;
                }
            }
            const auto p = softmax({s.data(), n});
            c.w = Eigen::Map<const Matrix>(p.data(), 1, rows);
        }
    } else {
        if (cfg.variant == Variant::Classical) {
            c.zq = c.z;
        } else {
            const Tensor &qt = parameter(kQkToken);
            const Tensor &qp = parameter(kQkPos);
            const std::size_t a = cfg.angle_dim();
            std::vector<double> qprop;
            if (cfg.conditioned) {
                qprop = project(c.pz, parameter(kQkPropW), parameter(kQkPropB));
            }
            c.zq.resize(rows, static_cast<Eigen::Index>(a));
            for (std::size_t i = 0; i < n; ++i) {
                const auto t = static_cast<std::size_t>(ids[i]);
                for (std::size_t j = 0; j < a; ++j) {
                    c.zq(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        qt.at(t, j) + qp.at(i, j) + (cfg.conditioned ? qprop[j] : 0.0);
                }
            }
        }
        const auto wq = view(parameter(kQueryW));
        const auto wk = view(parameter(kKeyW));
        if (full_attention) {
            c.q = c.zq * wq;
            c.k = c.zq * wk;
            c.att = attn::classical_attention_matrix(c.zq, wq, wk, cfg.d_k());
            c.w = c.att.weights;
        } else {
            const Matrix q_last = c.zq.row(rows - 1) * wq;
            const Matrix k = c.zq * wk;
            const Matrix s = (q_last * k.transpose()) / sqrt_dk;
            const auto p = softmax({s.data(), n});
            c.w = Eigen::Map<const Matrix>(p.data(), 1, rows);
        }
    }

    if (full_attention) {
        c.h = c.w.triangularView<Eigen::Lower>() * c.v;
    } else {
        c.h = c.w * c.v;
    }
    c.logits = c.h * view(parameter(kHeadW));
    c.logits.rowwise() += view(parameter(kHeadB)).row(0);
}

SequenceOutput Model::forward_sequence(std::span<const int> ids,
                                       const PropertyVector *properties) const {
    Cache c;
    forward_cache(ids, properties, c, true);
    return {std::move(c.logits), std::move(c.att)};
}

std::vector<double> Model::next_token_logits(std::span<const int> ids,
                                             const PropertyVector *properties) const {
    Cache c;
    forward_cache(ids, properties, c, false);
    return {c.logits.data(), c.logits.data() + c.logits.size()};
}

Logits Model::forward(const Batch &batch, std::size_t threads) const {
    QATTN_REQUIRE(batch.ids.size() == batch.batch_size * batch.length, "malformed batch");
    QATTN_REQUIRE(!config_.conditioned || batch.properties.size() == batch.batch_size,
                  "conditioned forward needs one property vector per row");
    Logits out;
    out.batch_size = batch.batch_size;
    out.length = batch.length;
    out.vocab = config_.vocab_size;
    out.values.assign(batch.batch_size * batch.length * out.vocab, 0.0);
    parallel_for(batch.batch_size, threads, [&](std::size_t b) {
        const auto row = batch.row(b);
        if (row.empty()) {
            return;
        }
        const PropertyVector *props = config_.conditioned ? &batch.properties[b] : nullptr;
        const auto r = forward_sequence(row, props);
        std::copy(r.logits.data(), r.logits.data() + r.logits.size(),
                  out.values.begin() + static_cast<long>(b * batch.length * out.vocab));
    });
    return out;
}

Gradients Model::zero_gradients() const {
    Gradients g;
    g.reserve(params_.size());
    for (const auto &t : params_) {
        g.emplace_back(t.size(), 0.0);
    }
    return g;
}

Model::RowStats Model::backward_row(std::span<const int> row, const PropertyVector *properties,
                                    Gradients *grads, double scale) const {
    QATTN_REQUIRE(row.size() >= 2, "a training row needs at least SOS and one target");
    const std::span<const int> input = row.first(row.size() - 1);
    const std::size_t n = input.size();
    const auto rows = static_cast<Eigen::Index>(n);
    Cache c;
    forward_cache(input, properties, c, true);

    RowStats st;
    Matrix dlogits(rows, static_cast<Eigen::Index>(config_.vocab_size));
    for (std::size_t i = 0; i < n; ++i) {
        const auto target = static_cast<std::size_t>(row[i + 1]);
        const auto ii = static_cast<Eigen::Index>(i);
        const auto p = softmax({c.logits.row(ii).data(), config_.vocab_size});
        st.loss_sum -= std::log(p[target]);
        ++st.tokens;
        const double top = c.logits.row(ii).maxCoeff();
        if (c.logits(ii, static_cast<Eigen::Index>(target)) == top) {
            st.correct += 1.0 / static_cast<double>((c.logits.row(ii).array() == top).count());
        }
        for (std::size_t j = 0; j < config_.vocab_size; ++j) {
            dlogits(ii, static_cast<Eigen::Index>(j)) =
                scale * (p[j] - (j == target ? 1.0 : 0.0));
        }
    }
    if (grads == nullptr) {
        return st;
    }
    Gradients &g = *grads;
    auto grad_of = [&](std::string_view name) -> MutMap {
        const std::size_t k = index_of(name);
        return view(g[k], params_[k]);
    };
    auto add_row = [&](std::string_view name, std::size_t r, const auto &values) {
        auto m = grad_of(name);
        m.row(static_cast<Eigen::Index>(r)) += values;
    };

    grad_of(kHeadW) += c.h.transpose() * dlogits;
    grad_of(kHeadB).row(0) += dlogits.colwise().sum();
    const Matrix dh = dlogits * view(parameter(kHeadW)).transpose();
    const Matrix dv = c.w.triangularView<Eigen::Lower>().transpose() * dh;
    grad_of(kValueW) += c.z.transpose() * dv;
    grad_of(kValueB).row(0) += dv.colwise().sum();
    Matrix dz = dv * view(parameter(kValueW)).transpose();

    if (config_.variant != Variant::Quantum) {
        const Matrix dw = dh * c.v.transpose();
        const Matrix draw = attn::masked_softmax_backward(c.w, dw) /
                            std::sqrt(static_cast<double>(config_.d_k()));
        const Matrix lower = draw.triangularView<Eigen::Lower>();
        const Matrix dq = lower * c.k;
        const Matrix dk = lower.transpose() * c.q;
        grad_of(kQueryW) += c.zq.transpose() * dq;
        grad_of(kKeyW) += c.zq.transpose() * dk;
        const Matrix dzq = dq * view(parameter(kQueryW)).transpose() +
                           dk * view(parameter(kKeyW)).transpose();
        if (config_.variant == Variant::Classical) {
            dz += dzq;
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                add_row(kQkToken, static_cast<std::size_t>(input[i]), dzq.row(ii));
                add_row(kQkPos, i, dzq.row(ii));
            }
            if (config_.conditioned) {
                const Eigen::RowVectorXd col = dzq.colwise().sum();
                auto gw = grad_of(kQkPropW);
                for (std::size_t r = 0; r < smiles::kNumProperties; ++r) {
                    gw.row(static_cast<Eigen::Index>(r)) += c.pz[r] * col;
                }
                grad_of(kQkPropB).row(0) += col;
            }
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        add_row(kTokenEmbed, static_cast<std::size_t>(input[i]), dz.row(ii));
        add_row(kPosEmbed, i, dz.row(ii));
    }
    if (config_.conditioned) {
        const Eigen::RowVectorXd col = dz.colwise().sum();
        auto gw = grad_of(kPropW);
        for (std::size_t r = 0; r < smiles::kNumProperties; ++r) {
            gw.row(static_cast<Eigen::Index>(r)) += c.pz[r] * col;
        }
        grad_of(kPropB).row(0) += col;
    }
    return st;
}

// ---------------------------------------------------------------- Checkpoint

void Model::save(const std::filesystem::path &path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write checkpoint " + path.string());
    }
    out.write(kMagic.data(), kMagic.size());
    put_u32(out, kCheckpointVersion);
    const std::string cfg = config_json(config_, vocab_).dump();
    put_u64(out, cfg.size());
    out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    put_u64(out, params_.size() + buffers_.size());
    auto write_tensor = [&](const Tensor &t, std::uint8_t kind) {
        out.put(static_cast<char>(kind));
        put_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put_u64(out, t.rows);
        put_u64(out, t.cols);
        for (double x : t.data) {
            put_u64(out, std::bit_cast<std::uint64_t>(x));
        }
    };
    for (const auto &t : params_) {
        write_tensor(t, 0);
    }
    for (const auto &t : buffers_) {
        write_tensor(t, 1);
    }
    if (!out) {
        throw DataError("failed writing checkpoint " + path.string());
    }
}

Model Model::load(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read checkpoint " + path.string());
    }
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (in.gcount() != static_cast<std::streamsize>(magic.size()) || magic != kMagic) {
        throw DataError(path.string() + " is not a qattn checkpoint");
    }
    const auto version = static_cast<std::uint32_t>(get_le(in, 4));
    if (version != kCheckpointVersion) {
        throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(get_bytes(in, get_le(in, 8)));
    } catch (const nlohmann::json::exception &e) {
        throw DataError(std::string("corrupt checkpoint config: ") + e.what());
    }
    ModelConfig cfg;
    std::vector<std::string> tokens;
    try {
        cfg.variant = parse_variant(j.at("variant").get<std::string>());
        cfg.conditioned = j.at("conditioned").get<bool>();
        cfg.working_qubits = j.at("working_qubits").get<std::size_t>();
        cfg.vocab_size = j.at("vocab_size").get<std::size_t>();
        cfg.max_seq_len = j.at("max_seq_len").get<std::size_t>();
        cfg.d_value = j.at("d_value").get<std::size_t>();
        cfg.seed = j.at("seed").get<std::uint64_t>();
        tokens = j.at("vocabulary").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception &e) {
        throw DataError(std::string("corrupt checkpoint config: ") + e.what());
    }
    Model m(cfg, smiles::Vocabulary(std::move(tokens)));
    const auto count = get_le(in, 8);
    std::size_t seen = 0;
    for (std::uint64_t k = 0; k < count; ++k) {
        const int kind = in.get();
        const std::string name = get_bytes(in, get_le(in, 4));
        const auto rows = get_le(in, 8);
        const auto cols = get_le(in, 8);
        Tensor *t = nullptr;
        if (kind == 0 && m.index_.contains(name)) {
            t = &m.params_[m.index_.at(name)];
        } else if (kind == 1) {
            for (auto &b : m.buffers_) {
                t = b.name == name ? &b : t;
            }
        }
        if (t == nullptr || t->rows != rows || t->cols != cols) {
            throw DataError("checkpoint tensor '" + name + "' does not fit the configuration");
        }
        for (double &x : t->data) {
            x = std::bit_cast<double>(get_le(in, 8));
        }
        ++seen;
    }
    if (seen != m.params_.size() + m.buffers_.size()) {
        throw DataError("checkpoint is missing tensors");
    }
    return m;
}

// ---------------------------------------------------------------- Generation

std::vector<int> generate(const Model &model, const PropertyVector *properties,
                          const GenerateOptions &options, std::uint64_t sample_index) {
    QATTN_REQUIRE(options.temperature > 0.0, "temperature must be positive");
    // SOS, the tokens and EOS must fit the positional table.
    const std::size_t cap = model.config().max_seq_len - 2;
    const std::size_t limit = options.max_len == 0 ? cap : std::min(options.max_len, cap);
    Rng rng(options.seed, Purpose::Sample, sample_index);
    std::vector<int> ids{smiles::Vocabulary::kSos};
    while (ids.size() - 1 < limit) {
        const auto logits = model.next_token_logits(ids, properties);
        const auto p = softmax(logits, options.temperature);
        const double u = rng.uniform();
        double acc = 0.0;
        std::size_t pick = p.size() - 1;
        for (std::size_t j = 0; j < p.size(); ++j) {
            acc += p[j];
            if (u < acc) {
                pick = j;
                break;
            }
        }
        const int id = static_cast<int>(pick);
        if (id == smiles::Vocabulary::kEos) {
            break;
        }
        ids.push_back(id);
        if (smiles::Vocabulary::is_special(id)) {
            break;
        }
    }
    return {ids.begin() + 1, ids.end()};
}

std::string decode_lenient(const smiles::Vocabulary &vocab, std::span<const int> ids) {
    std::string s;
    for (int id : ids) {
        s += vocab.token(id);
    }
    return s;
}

} // namespace qattn::model
