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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace qattn::smiles {

/**
 * @brief Ordered token list with the three special tokens first.
 *
 * Ids are positions in the list, so a persisted vocabulary reproduces ids
 * exactly.
 */
class Vocabulary {
  public:
    static constexpr int kPad = 0;
    static constexpr int kSos = 1;
    static constexpr int kEos = 2;
    static constexpr std::string_view kPadToken = "<pad>";
    static constexpr std::string_view kSosToken = "<sos>";
    static constexpr std::string_view kEosToken = "<eos>";

    /// Specials plus the 30 chemical tokens of the QM9 alphabet (size 33).
    static Vocabulary qm9();

    /// The QM9 alphabet extended by any further tokens the lexer finds in
    /// `corpus`, appended in byte order.
    static Vocabulary from_corpus(std::span<const std::string> corpus);

    /// Builds from an explicit ordered list that must start with the specials.
    explicit Vocabulary(std::vector<std::string> tokens);

    /// One token per line, UTF-8, specials included.
    void save(const std::filesystem::path &path) const;
    static Vocabulary load(const std::filesystem::path &path);

    [[nodiscard]] std::size_t size() const noexcept { return tokens_.size(); }
    [[nodiscard]] const std::vector<std::string> &tokens() const noexcept { return tokens_; }
    [[nodiscard]] const std::string &token(int id) const;
    [[nodiscard]] std::optional<int> id(std::string_view token) const;
    [[nodiscard]] static bool is_special(int id) noexcept { return id >= 0 && id <= kEos; }

    /// Greedy longest match over the chemical tokens. Throws
    /// TokenizationError naming the first offset no token covers.
    [[nodiscard]] std::vector<int> tokenize(std::string_view smiles) const;

    /// Concatenation of token strings. Throws ValidationError on unknown or
    /// special ids.
    [[nodiscard]] std::string detokenize(std::span<const int> ids) const;

    friend bool operator==(const Vocabulary &a, const Vocabulary &b) {
        return a.tokens_ == b.tokens_;
    }

  private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
    std::size_t longest_ = 0;
};

/// Lexes a SMILES string into syntactic tokens (bracket atoms, two-letter
/// organic atoms, %nn ring labels, single characters) without a vocabulary.
std::vector<std::string> lex(std::string_view smiles);

struct Atom {
    std::string element; // capitalized symbol, e.g. "C", "Cl"
    bool aromatic = false;
    bool bracket = false;
    int charge = 0;
    /// Bracket atoms only; unbracketed atoms get implicit hydrogens.
    int explicit_h = 0;
};

struct Bond {
    std::size_t a = 0;
    std::size_t b = 0;
    /// 1, 2, 3, or 0 for aromatic.
    int order = 1;
};

/// Parsed SMILES connectivity, before kekulization or valence checks.
struct MolGraph {
    std::vector<Atom> atoms;
    std::vector<Bond> bonds;
    std::size_t fragments = 0;
};

struct ParseResult {
    std::optional<MolGraph> graph;
    std::string error;
};

/// Syntax only: balanced branches, paired ring closures, legal bracket atoms.
ParseResult parse(std::string_view smiles);

/// A parsed molecule with a Kekule bond assignment and hydrogen counts.
struct Molecule {
    MolGraph graph;
    std::vector<int> kekule_order; // per bond, 1..3
    std::vector<int> hydrogens;    // per atom, total H
    std::vector<bool> ring_bond;   // per bond
};

struct Validity {
    bool valid = false;
    std::string reason; // empty when valid
};

/**
 * @brief Syntax, Kekule assignment of aromatic bonds, and valence table.
 *
 * Allowed valences: C 4, N 3, O 2, F/Cl/Br/I 1, B 3, P 3/5, S 2/4/6. A
 * positive charge raises the N/O/P/S valence by one, a negative charge lowers
 * it; charged C and B have valence 3.
 */
Validity check_validity(std::string_view smiles);

/// The full analysis behind check_validity; throws ValidationError with the
/// INVALID reason.
Molecule analyze(std::string_view smiles);

/// The nine property slots in file order.
enum class Property : std::uint8_t { MW, HBA, HBD, nRot, nRing, nHet, TPSA, logP, Stereo };
inline constexpr std::size_t kNumProperties = 9;
inline constexpr std::array<std::string_view, kNumProperties> kPropertyNames = {
    "MW", "HBA", "HBD", "nRot", "nRing", "nHet", "TPSA", "logP", "Stereo"};

/// Natively computable descriptors; the last three are not computed.
struct Descriptors {
    double mw = 0.0;
    int hba = 0;   // N + O atoms
    int hbd = 0;   // N/O atoms carrying hydrogen
    int n_rot = 0; // acyclic single bonds between non-terminal, non-sp heavy atoms
    int n_ring = 0;
    int n_het = 0;
    std::optional<double> tpsa;
    std::optional<double> logp;
    std::optional<double> stereo;

    /// Slot value; nullopt for TPSA, logP and Stereo.
    [[nodiscard]] std::optional<double> get(Property p) const;
};

Descriptors descriptors(const Molecule &mol);
Descriptors descriptors(std::string_view smiles);

struct GenerationMetrics {
    std::size_t total = 0;
    std::size_t valid = 0;
    std::size_t unique_valid = 0;
    std::size_t novel = 0;
    double validity = 0.0; // percent
    double uniqueness = 0.0;
    double validity_x_uniqueness = 0.0;
    double novelty = 0.0;
    /// Set when no valid string exists and the ratios over valid strings
    /// are reported as 0.
    bool undefined_ratios = false;
};

GenerationMetrics generation_metrics(std::span<const std::string> generated,
                                     const std::unordered_set<std::string> &training);

void write_metrics_table(std::ostream &out, const GenerationMetrics &m);
void write_metrics_csv(std::ostream &out, const GenerationMetrics &m);

} // namespace qattn::smiles
