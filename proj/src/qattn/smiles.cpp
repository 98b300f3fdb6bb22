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
#include "qattn/smiles.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>

#include "qattn/error.hpp"

namespace qattn::smiles {

namespace {

constexpr std::array<std::string_view, 30> kQm9Tokens = {
    "#",      "(",      ")",     "-",     "1",     "2",     "3",     "4",
    "5",      "=",      "C",     "F",     "N",     "O",     "[C-]",  "[CH-]",
    "[N+]",   "[N-]",   "[NH+]", "[NH2+]", "[NH3+]", "[O-]", "[c-]", "[cH-]",
    "[n-]",   "[nH+]",  "[nH]",  "c",     "n",     "o",
};

} // namespace

// ---------------------------------------------------------------- Vocabulary

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.size() < 3 || tokens_[kPad] != kPadToken || tokens_[kSos] != kSosToken ||
        tokens_[kEos] != kEosToken) {
        throw DataError("vocabulary must start with " + std::string(kPadToken) + ", " +
                        std::string(kSosToken) + ", " + std::string(kEosToken));
    }
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (tokens_[i].empty()) {
            throw DataError("empty token at vocabulary line " + std::to_string(i + 1));
        }
        if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
            throw DataError("duplicate vocabulary token '" + tokens_[i] + "'");
        }
        if (i > kEos) {
            longest_ = std::max(longest_, tokens_[i].size());
        }
    }
}

Vocabulary Vocabulary::qm9() {
    std::vector<std::string> t{std::string(kPadToken), std::string(kSosToken),
                               std::string(kEosToken)};
    t.insert(t.end(), kQm9Tokens.begin(), kQm9Tokens.end());
    return Vocabulary(std::move(t));
}

Vocabulary Vocabulary::from_corpus(std::span<const std::string> corpus) {
    const Vocabulary base = qm9();
    std::set<std::string> extra;
    for (const auto &s : corpus) {
        for (auto &tok : lex(s)) {
            if (!base.id(tok)) {
                extra.insert(std::move(tok));
            }
        }
    }
    if (extra.empty()) {
        return base;
    }
    std::vector<std::string> t = base.tokens();
    t.insert(t.end(), extra.begin(), extra.end());
    return Vocabulary(std::move(t));
}

void Vocabulary::save(const std::filesystem::path &path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write vocabulary " + path.string());
    }
    for (const auto &t : tokens_) {
        out << t << '\n';
    }
}

Vocabulary Vocabulary::load(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read vocabulary " + path.string());
    }
    std::vector<std::string> t;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        t.push_back(line);
    }
    return Vocabulary(std::move(t));
}

const std::string &Vocabulary::token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw ValidationError("token id " + std::to_string(id) + " outside vocabulary");
    }
    return tokens_[static_cast<std::size_t>(id)];
}

std::optional<int> Vocabulary::id(std::string_view token) const {
    if (auto it = index_.find(std::string(token)); it != index_.end()) {
        return it->second;
    }
    return std::nullopt;
}

std::vector<int> Vocabulary::tokenize(std::string_view smiles) const {
    std::vector<int> ids;
    std::size_t pos = 0;
    while (pos < smiles.size()) {
        std::size_t len = std::min(longest_, smiles.size() - pos);
        std::optional<int> hit;
        for (; len > 0; --len) {
            hit = id(smiles.substr(pos, len));
            if (hit && !is_special(*hit)) {
                break;
            }
            hit.reset();
        }
        if (!hit) {
            throw TokenizationError(std::string(smiles), pos);
        }
        ids.push_back(*hit);
        pos += len;
    }
    return ids;
}

std::string Vocabulary::detokenize(std::span<const int> ids) const {
    std::string s;
    for (int id : ids) {
        if (is_special(id)) {
            throw ValidationError("special token id " + std::to_string(id) +
                                  " in detokenize input");
        }
        s += token(id);
    }
    return s;
}

std::vector<std::string> lex(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t len = 1;
        if (s[i] == '[') {
            const auto close = s.find(']', i);
            len = close == std::string_view::npos ? s.size() - i : close - i + 1;
        } else if (s.substr(i, 2) == "Cl" || s.substr(i, 2) == "Br") {
            len = 2;
        } else if (s[i] == '%' && i + 2 < s.size()) {
            len = 3;
        }
        out.emplace_back(s.substr(i, len));
        i += len;
    }
    return out;
}

// ------------------------------------------------------------------- Parsing

namespace {

bool is_organic(std::string_view el) {
    static const std::set<std::string_view> k{"B", "C", "N", "O", "P", "S",
                                              "F", "Cl", "Br", "I"};
    return k.contains(el);
}

bool can_be_aromatic(std::string_view el) {
    static const std::set<std::string_view> k{"B", "C", "N", "O", "P", "S", "Se", "As"};
    return k.contains(el);
}

struct ParseFailure {
    std::string reason;
};

class Parser {
  public:
    explicit Parser(std::string_view s) : s_(s) {}

    MolGraph run() {
        if (s_.empty()) {
            fail("empty string");
        }
        while (pos_ < s_.size()) {
            const char c = s_[pos_];
            if (c == '(') {
                if (!prev_) {
                    fail("branch without a preceding atom");
                }
                if (pos_ + 1 < s_.size() && s_[pos_ + 1] == ')') {
                    fail("empty branch");
                }
                if (pending_) {
                    fail("bond before branch");
                }
                stack_.push_back(*prev_);
                ++pos_;
            } else if (c == ')') {
                if (stack_.empty()) {
                    fail("unbalanced parentheses");
                }
                if (pending_) {
                    fail("dangling bond");
                }
                prev_ = stack_.back();
                stack_.pop_back();
                ++pos_;
            } else if (c == '.') {
                if (pending_ || !prev_) {
                    fail("misplaced fragment separator");
                }
                if (!stack_.empty()) {
                    fail("unbalanced parentheses");
                }
                prev_.reset();
                ++pos_;
            } else if (std::string_view("-=#$:/\\").find(c) != std::string_view::npos) {
                if (pending_) {
                    fail("consecutive bond symbols");
                }
                if (!prev_) {
                    fail("bond without a preceding atom");
                }
                if (c == '$') {
                    fail("quadruple bonds are not supported");
                }
                pending_ = c == '=' ? 2 : c == '#' ? 3 : c == ':' ? 0 : 1;
                ++pos_;
            } else if (std::isdigit(static_cast<unsigned char>(c)) != 0 || c == '%') {
                ring_closure();
            } else {
                atom();
            }
        }
        if (pending_) {
            fail("dangling bond");
        }
        if (!stack_.empty()) {
            fail("unbalanced parentheses");
        }
        if (!rings_.empty()) {
            fail("unclosed ring");
        }
        if (!prev_) {
            fail("dangling fragment separator");
        }
        g_.fragments = count_fragments();
        return std::move(g_);
    }

  private:
    [[noreturn]] void fail(const std::string &why) const {
        throw ParseFailure{why + " at offset " + std::to_string(pos_)};
    }

    void add_bond(std::size_t a, std::size_t b, int order) {
        if (a == b) {
            fail("ring closure to the same atom");
        }
        for (const auto &bd : g_.bonds) {
            if ((bd.a == a && bd.b == b) || (bd.a == b && bd.b == a)) {
                fail("duplicate bond");
            }
        }
        if (order == 0 && !(g_.atoms[a].aromatic && g_.atoms[b].aromatic)) {
            fail("aromatic bond between non-aromatic atoms");
        }
        g_.bonds.push_back({a, b, order});
    }

    int default_order(std::size_t a, std::size_t b) const {
        return g_.atoms[a].aromatic && g_.atoms[b].aromatic ? 0 : 1;
    }

    void attach(std::size_t idx) {
        if (prev_) {
            add_bond(*prev_, idx, pending_ ? *pending_ : default_order(*prev_, idx));
        }
        pending_.reset();
        prev_ = idx;
    }

    void ring_closure() {
        if (!prev_) {
            fail("ring closure without a preceding atom");
        }
        int label = 0;
        if (s_[pos_] == '%') {
            if (pos_ + 2 >= s_.size() || std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])) == 0 ||
                std::isdigit(static_cast<unsigned char>(s_[pos_ + 2])) == 0) {
                fail("malformed %nn ring label");
            }
            label = (s_[pos_ + 1] - '0') * 10 + (s_[pos_ + 2] - '0');
            pos_ += 3;
        } else {
            label = s_[pos_] - '0';
            ++pos_;
        }
        if (auto it = rings_.find(label); it != rings_.end()) {
            auto [other, order] = it->second;
            if (order && pending_ && *order != *pending_) {
                fail("conflicting ring-closure bond orders");
            }
            const int o = pending_ ? *pending_ : order ? *order : default_order(other, *prev_);
            add_bond(other, *prev_, o);
            rings_.erase(it);
        } else {
            rings_.emplace(label, std::make_pair(*prev_, pending_));
        }
        pending_.reset();
    }

    void atom() {
        Atom a;
        const char c = s_[pos_];
        if (c == '[') {
            bracket_atom(a);
        } else {
            std::string el;
            if (s_.substr(pos_, 2) == "Cl" || s_.substr(pos_, 2) == "Br") {
                el = std::string(s_.substr(pos_, 2));
                pos_ += 2;
            } else if (std::islower(static_cast<unsigned char>(c)) != 0) {
                el = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
                if (el != "B" && el != "C" && el != "N" && el != "O" && el != "P" && el != "S") {
                    fail("unknown aromatic atom");
                }
                a.aromatic = true;
                ++pos_;
            } else {
                el = std::string(1, c);
                if (!is_organic(el)) {
                    fail("unknown atom symbol '" + el + "'");
                }
                ++pos_;
            }
            a.element = el;
        }
        g_.atoms.push_back(a);
        attach(g_.atoms.size() - 1);
    }

    void bracket_atom(Atom &a) {
        const auto close = s_.find(']', pos_);
        if (close == std::string_view::npos) {
            fail("unterminated bracket atom");
        }
        const std::string_view body = s_.substr(pos_ + 1, close - pos_ - 1);
        std::size_t i = 0;
        while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i])) != 0) {
            ++i; // isotope, ignored
        }
        if (i >= body.size() || std::isalpha(static_cast<unsigned char>(body[i])) == 0) {
            fail("bracket atom without an element");
        }
        std::string el;
        if (std::islower(static_cast<unsigned char>(body[i])) != 0) {
            // Aromatic: se, as, or a single letter.
            if (body.substr(i, 2) == "se" || body.substr(i, 2) == "as") {
                el = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(body[i])))) +
                     body[i + 1];
                i += 2;
            } else {
                el = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(body[i]))));
                ++i;
            }
            a.aromatic = true;
            if (!can_be_aromatic(el)) {
                fail("element cannot be aromatic");
            }
        } else {
            el = std::string(1, body[i]);
            ++i;
            if (i < body.size() && std::islower(static_cast<unsigned char>(body[i])) != 0) {
                el += body[i];
                ++i;
            }
        }
        a.element = el;
        a.bracket = true;
        while (i < body.size() && body[i] == '@') {
            ++i; // chirality, passed through
        }
        if (i < body.size() && body[i] == 'H') {
            ++i;
            a.explicit_h = 1;
            if (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i])) != 0) {
                a.explicit_h = body[i] - '0';
                ++i;
            }
        }
        if (i < body.size() && (body[i] == '+' || body[i] == '-')) {
            const int sign = body[i] == '+' ? 1 : -1;
            const char sym = body[i];
            ++i;
            int mag = 1;
            if (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i])) != 0) {
                mag = body[i] - '0';
                ++i;
            } else {
                while (i < body.size() && body[i] == sym) {
                    ++mag;
                    ++i;
                }
            }
            a.charge = sign * mag;
        }
        if (i < body.size() && body[i] == ':') {
            ++i;
            while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i])) != 0) {
                ++i;
            }
        }
        if (i != body.size()) {
            fail("illegal bracket atom syntax");
        }
        pos_ = close + 1;
    }

    std::size_t count_fragments() const {
        std::vector<std::size_t> parent(g_.atoms.size());
        std::iota(parent.begin(), parent.end(), 0);
        std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
            return parent[x] == x ? x : parent[x] = find(parent[x]);
        };
        for (const auto &b : g_.bonds) {
            parent[find(b.a)] = find(b.b);
        }
        std::size_t roots = 0;
        for (std::size_t i = 0; i < parent.size(); ++i) {
            roots += find(i) == i ? 1 : 0;
        }
        return roots;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    MolGraph g_;
    std::optional<std::size_t> prev_;
    std::optional<int> pending_;
    std::vector<std::size_t> stack_;
    std::map<int, std::pair<std::size_t, std::optional<int>>> rings_;
};

} // namespace

ParseResult parse(std::string_view smiles) {
    try {
        return {Parser(smiles).run(), {}};
    } catch (const ParseFailure &f) {
        return {std::nullopt, f.reason};
    }
}

// ------------------------------------------------------------ Kekule/valence

namespace {

struct ElementInfo {
    double weight;
    std::vector<int> valences; // neutral, ascending
    bool shifts_with_charge;   // false: charge lowers valence (C, B)
};

const ElementInfo *element_info(std::string_view el) {
    static const std::map<std::string, ElementInfo, std::less<>> k{
        {"H", {1.008, {1}, true}},         {"B", {10.812, {3}, false}},
        {"C", {12.011, {4}, false}},       {"N", {14.007, {3}, true}},
        {"O", {15.999, {2}, true}},        {"F", {18.998, {1}, true}},
        {"P", {30.974, {3, 5}, true}},     {"S", {32.067, {2, 4, 6}, true}},
        {"Cl", {35.453, {1}, true}},       {"Br", {79.904, {1}, true}},
        {"I", {126.904, {1}, true}},
    };
    auto it = k.find(el);
    return it == k.end() ? nullptr : &it->second;
}

/// Allowed valences after charge adjustment, ascending.
std::vector<int> allowed_valences(const Atom &a) {
    const ElementInfo *info = element_info(a.element);
    std::vector<int> out;
    for (int v : info->valences) {
        const int adj = info->shifts_with_charge ? v + a.charge : v - std::abs(a.charge);
        if (adj >= 0) {
            out.push_back(adj);
        }
    }
    return out;
}

[[noreturn]] void invalid(const std::string &why) { throw ValidationError(why); }

std::vector<bool> ring_bonds(const MolGraph &g) {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(g.atoms.size());
    for (std::size_t k = 0; k < g.bonds.size(); ++k) {
        adj[g.bonds[k].a].push_back({g.bonds[k].b, k});
        adj[g.bonds[k].b].push_back({g.bonds[k].a, k});
    }
    std::vector<bool> ring(g.bonds.size(), false);
    for (std::size_t k = 0; k < g.bonds.size(); ++k) {
        std::vector<bool> seen(g.atoms.size(), false);
        std::vector<std::size_t> todo{g.bonds[k].a};
        seen[g.bonds[k].a] = true;
        while (!todo.empty() && !ring[k]) {
            const std::size_t x = todo.back();
            todo.pop_back();
            for (auto [y, e] : adj[x]) {
                if (e == k || seen[y]) {
                    continue;
                }
                if (y == g.bonds[k].b) {
                    ring[k] = true;
                    break;
                }
                seen[y] = true;
                todo.push_back(y);
            }
        }
    }
    return ring;
}

/// Perfect matching of `need` atoms over candidate bonds by backtracking;
/// aromatic systems here are a few dozen atoms at most.
bool match(const std::vector<std::vector<std::pair<std::size_t, std::size_t>>> &adj,
           std::vector<int> &mate_bond, std::vector<bool> &need_open) {
    std::size_t best = need_open.size();
    std::size_t best_options = ~std::size_t{0};
    for (std::size_t i = 0; i < need_open.size(); ++i) {
        if (!need_open[i]) {
            continue;
        }
        std::size_t options = 0;
        for (auto [j, e] : adj[i]) {
            options += need_open[j] ? 1 : 0;
        }
        if (options < best_options) {
            best = i;
            best_options = options;
        }
    }
    if (best == need_open.size()) {
        return true;
    }
    if (best_options == 0) {
        return false;
    }
    need_open[best] = false;
    for (auto [j, e] : adj[best]) {
        if (!need_open[j]) {
            continue;
        }
        need_open[j] = false;
        mate_bond[e] = 1;
        if (match(adj, mate_bond, need_open)) {
            return true;
        }
        mate_bond[e] = 0;
        need_open[j] = true;
    }
    need_open[best] = true;
    return false;
}

} // namespace

Molecule analyze(std::string_view smiles) {
    ParseResult pr = parse(smiles);
    if (!pr.graph) {
        invalid(pr.error);
    }
    Molecule m;
    m.graph = std::move(*pr.graph);
    const MolGraph &g = m.graph;
    const std::size_t na = g.atoms.size();

    for (const auto &a : g.atoms) {
        if (element_info(a.element) == nullptr) {
            invalid("unsupported element " + a.element);
        }
    }
    m.ring_bond = ring_bonds(g);

    // Sigma-bond count and non-aromatic extra order per atom.
    std::vector<int> sigma(na, 0);
    std::vector<int> extra(na, 0);
    for (std::size_t k = 0; k < g.bonds.size(); ++k) {
        const auto &b = g.bonds[k];
        if (b.order == 0 && !m.ring_bond[k]) {
            invalid("aromatic bond outside a ring");
        }
        for (std::size_t x : {b.a, b.b}) {
            ++sigma[x];
            extra[x] += b.order > 1 ? b.order - 1 : 0;
        }
    }

    // Aromatic atoms that still need one double bond in the Kekule form.
    std::vector<bool> need(na, false);
    for (std::size_t i = 0; i < na; ++i) {
        const Atom &a = g.atoms[i];
        if (!a.aromatic) {
            continue;
        }
        bool in_ring = false;
        for (std::size_t k = 0; k < g.bonds.size(); ++k) {
            if ((g.bonds[k].a == i || g.bonds[k].b == i) && g.bonds[k].order == 0) {
                in_ring = true;
            }
        }
        if (!in_ring) {
            invalid("non-ring atom marked aromatic");
        }
        const int used = sigma[i] + extra[i] + (a.bracket ? a.explicit_h : 0);
        const auto vals = allowed_valences(a);
        auto it = std::find_if(vals.begin(), vals.end(), [used](int v) { return v >= used; });
        if (it == vals.end()) {
            invalid("valence: " + a.element + " with " + std::to_string(used) + " bonds");
        }
        need[i] = *it - used >= 1;
    }
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(na);
    for (std::size_t k = 0; k < g.bonds.size(); ++k) {
        const auto &b = g.bonds[k];
        if (b.order == 0 && need[b.a] && need[b.b]) {
            adj[b.a].push_back({b.b, k});
            adj[b.b].push_back({b.a, k});
        }
    }
    std::vector<int> doubled(g.bonds.size(), 0);
    std::vector<bool> open = need;
    if (!match(adj, doubled, open)) {
        invalid("cannot kekulize aromatic system");
    }
    m.kekule_order.resize(g.bonds.size());
    std::vector<int> order_sum(na, 0);
    for (std::size_t k = 0; k < g.bonds.size(); ++k) {
        const int o = g.bonds[k].order == 0 ? 1 + doubled[k] : g.bonds[k].order;
        m.kekule_order[k] = o;
        order_sum[g.bonds[k].a] += o;
        order_sum[g.bonds[k].b] += o;
    }

    m.hydrogens.resize(na);
    for (std::size_t i = 0; i < na; ++i) {
        const Atom &a = g.atoms[i];
        const auto vals = allowed_valences(a);
        if (a.bracket) {
            const int used = order_sum[i] + a.explicit_h;
            if (vals.empty() || used > vals.back()) {
                invalid("valence: " + a.element + " with " + std::to_string(used) + " bonds");
            }
            m.hydrogens[i] = a.explicit_h;
        } else {
            auto it = std::find_if(vals.begin(), vals.end(),
                                   [&](int v) { return v >= order_sum[i]; });
            if (it == vals.end()) {
                invalid("valence: " + a.element + " with " + std::to_string(order_sum[i]) +
                        " bonds");
            }
            m.hydrogens[i] = *it - order_sum[i];
        }
    }
    return m;
}

Validity check_validity(std::string_view smiles) {
    try {
        (void)analyze(smiles);
        return {true, {}};
    } catch (const ValidationError &e) {
        return {false, e.what()};
    }
}

// --------------------------------------------------------------- Descriptors

std::optional<double> Descriptors::get(Property p) const {
    switch (p) {
    case Property::MW:
        return mw;
    case Property::HBA:
        return hba;
    case Property::HBD:
        return hbd;
    case Property::nRot:
        return n_rot;
    case Property::nRing:
        return n_ring;
    case Property::nHet:
        return n_het;
    case Property::TPSA:
        return tpsa;
    case Property::logP:
        return logp;
    case Property::Stereo:
        return stereo;
    }
    return std::nullopt;
}

Descriptors descriptors(const Molecule &mol) {
    const MolGraph &g = mol.graph;
    Descriptors d;
    std::vector<int> degree(g.atoms.size(), 0);
    std::vector<bool> has_triple(g.atoms.size(), false);
    for (std::size_t k = 0; k < g.bonds.size(); ++k) {
        for (std::size_t x : {g.bonds[k].a, g.bonds[k].b}) {
            ++degree[x];
            if (mol.kekule_order[k] == 3) {
                has_triple[x] = true;
            }
        }
    }
    for (std::size_t i = 0; i < g.atoms.size(); ++i) {
        const Atom &a = g.atoms[i];
        d.mw += element_info(a.element)->weight + 1.008 * mol.hydrogens[i];
        const bool polar = a.element == "N" || a.element == "O";
        d.hba += polar ? 1 : 0;
        d.hbd += polar && mol.hydrogens[i] > 0 ? 1 : 0;
        d.n_het += a.element != "C" && a.element != "H" ? 1 : 0;
    }
    for (std::size_t k = 0; k < g.bonds.size(); ++k) {
        const auto &b = g.bonds[k];
        if (b.order == 1 && !mol.ring_bond[k] && degree[b.a] >= 2 && degree[b.b] >= 2 &&
            !has_triple[b.a] && !has_triple[b.b]) {
            ++d.n_rot;
        }
    }
    d.n_ring = static_cast<int>(g.bonds.size()) - static_cast<int>(g.atoms.size()) +
               static_cast<int>(g.fragments);
    return d;
}

Descriptors descriptors(std::string_view smiles) { return descriptors(analyze(smiles)); }

// ------------------------------------------------------------------- Metrics

GenerationMetrics generation_metrics(std::span<const std::string> generated,
                                     const std::unordered_set<std::string> &training) {
    QATTN_REQUIRE(!generated.empty(), "no generated strings to score");
    GenerationMetrics m;
    m.total = generated.size();
    std::unordered_set<std::string> distinct;
    for (const auto &s : generated) {
        if (check_validity(s).valid) {
            ++m.valid;
            distinct.insert(s);
        }
    }
    m.unique_valid = distinct.size();
    for (const auto &s : distinct) {
        m.novel += training.contains(s) ? 0 : 1;
    }
    const auto pct = [](std::size_t a, std::size_t b) {
        return 100.0 * static_cast<double>(a) / static_cast<double>(b);
    };
    m.validity = pct(m.valid, m.total);
    m.validity_x_uniqueness = pct(m.unique_valid, m.total);
    if (m.valid == 0) {
        m.undefined_ratios = true;
    } else {
        m.uniqueness = pct(m.unique_valid, m.valid);
        m.novelty = pct(m.novel, m.unique_valid);
    }
    return m;
}

void write_metrics_table(std::ostream &out, const GenerationMetrics &m) {
    char buf[160];
    out << "validity is syntax + Kekule + valence-table based (no full chemistry kernel)\n";
    std::snprintf(buf, sizeof buf, "%-12s %10s\n%-12s %10zu\n%-12s %10zu\n", "metric", "value",
                  "samples", m.total, "valid", m.valid);
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "%-12s %9.2f%%\n%-12s %9.2f%%\n%-12s %9.2f%%\n%-12s %9.2f%%\n", "validity",
                  m.validity, "uniqueness", m.uniqueness, "VxU", m.validity_x_uniqueness,
                  "novelty", m.novelty);
    out << buf;
    if (m.undefined_ratios) {
        out << "note: no valid samples; uniqueness and novelty are undefined (shown as 0)\n";
    }
}

void write_metrics_csv(std::ostream &out, const GenerationMetrics &m) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "total,valid,unique_valid,novel,validity_pct,uniqueness_pct,vxu_pct,"
                  "novelty_pct,undefined_ratios\n%zu,%zu,%zu,%zu,%.6f,%.6f,%.6f,%.6f,%d\n",
                  m.total, m.valid, m.unique_valid, m.novel, m.validity, m.uniqueness,
                  m.validity_x_uniqueness, m.novelty, m.undefined_ratios ? 1 : 0);
    out << buf;
}

} // namespace qattn::smiles
