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
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <gtest/gtest.h>

#include "qattn/error.hpp"
#include "qattn/rng.hpp"
#include "qattn/smiles.hpp"

namespace qattn::smiles {
namespace {

struct CorpusRow {
    std::string smiles;
    std::vector<double> props;
};

/// Minimal independent reader for the shipped corpus.
std::vector<CorpusRow> read_corpus() {
    std::ifstream in(std::string(QATTN_DATA_DIR) + "/qm9_like.csv");
    EXPECT_TRUE(in.good());
    std::vector<CorpusRow> rows;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        CorpusRow r;
        std::getline(ss, r.smiles, ',');
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            r.props.push_back(std::stod(cell));
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<std::string> strings_of(const Vocabulary &v, const std::vector<int> &ids) {
    std::vector<std::string> out;
    for (int id : ids) {
        out.push_back(v.token(id));
    }
    return out;
}

TEST(Vocabulary, Qm9AlphabetHasThirtyThreeTokens) {
    const auto v = Vocabulary::qm9();
    EXPECT_EQ(v.size(), 33U);
    EXPECT_EQ(v.token(Vocabulary::kPad), "<pad>");
    EXPECT_EQ(v.token(Vocabulary::kSos), "<sos>");
    EXPECT_EQ(v.token(Vocabulary::kEos), "<eos>");
    EXPECT_TRUE(v.id("[NH3+]").has_value());
    EXPECT_TRUE(v.id("[nH]").has_value());
    EXPECT_FALSE(v.id("Cl").has_value());
}

TEST(Vocabulary, TokenizesNitroFuranGreedily) {
    const auto v = Vocabulary::qm9();
    const std::vector<std::string> want{"O", "=", "[N+]", "(", "[O-]", ")", "c",
                                        "1", "c", "c", "o", "c", "1"};
    EXPECT_EQ(strings_of(v, v.tokenize("O=[N+]([O-])c1ccoc1")), want);
}

TEST(Vocabulary, EmptyStringGivesNoTokens) {
    const auto v = Vocabulary::qm9();
    EXPECT_TRUE(v.tokenize("").empty());
    EXPECT_EQ(v.detokenize({}), "");
}

TEST(Vocabulary, DetokenizeConcatenates) {
    const auto v = Vocabulary::qm9();
    const int c = *v.id("C");
    const std::vector<int> ids{c, c};
    EXPECT_EQ(v.detokenize(ids), "CC");
}

TEST(Vocabulary, TokenizationErrorNamesOffset) {
    const auto v = Vocabulary::qm9();
    try {
        (void)v.tokenize("CCClC");
        FAIL() << "expected a tokenization error";
    } catch (const TokenizationError &e) {
        EXPECT_EQ(e.offset(), 3U);
    }
    EXPECT_THROW((void)v.tokenize("<pad>"), TokenizationError);
}

TEST(Vocabulary, DetokenizeRejectsUnknownAndSpecialIds) {
    const auto v = Vocabulary::qm9();
    const std::vector<int> unknown{99};
    const std::vector<int> special{Vocabulary::kEos};
    EXPECT_THROW((void)v.detokenize(unknown), ValidationError);
    EXPECT_THROW((void)v.detokenize(special), ValidationError);
}

TEST(Vocabulary, CorpusRoundTripAndTotality) {
    const auto rows = read_corpus();
    ASSERT_GT(rows.size(), 1000U);
    std::vector<std::string> corpus;
    for (const auto &r : rows) {
        corpus.push_back(r.smiles);
    }
    const auto v = Vocabulary::from_corpus(corpus);
    EXPECT_EQ(v, Vocabulary::qm9());
    for (const auto &s : corpus) {
        EXPECT_EQ(v.detokenize(v.tokenize(s)), s);
    }
}

TEST(Vocabulary, FromCorpusAppendsUnseenTokensInByteOrder) {
    const std::vector<std::string> corpus{"CCl", "BrC", "C%12CC%12"};
    const auto v = Vocabulary::from_corpus(corpus);
    ASSERT_EQ(v.size(), 36U);
    EXPECT_EQ(v.token(33), "%12");
    EXPECT_EQ(v.token(34), "Br");
    EXPECT_EQ(v.token(35), "Cl");
}

TEST(Vocabulary, SaveLoadPreservesIds) {
    const std::vector<std::string> corpus{"CCl"};
    const auto v = Vocabulary::from_corpus(corpus);
    const auto path = std::filesystem::temp_directory_path() / "qattn_vocab_test.txt";
    v.save(path);
    EXPECT_EQ(Vocabulary::load(path), v);
    std::ofstream(path) << "C\n<pad>\n";
    EXPECT_THROW((void)Vocabulary::load(path), DataError);
    std::filesystem::remove(path);
}

TEST(Validity, UnclosedRing) {
    const auto r = check_validity("C1CC");
    EXPECT_FALSE(r.valid);
    EXPECT_NE(r.reason.find("unclosed ring"), std::string::npos) << r.reason;
}

TEST(Validity, PentavalentCarbon) {
    const auto r = check_validity("C(C)(C)(C)(C)C");
    EXPECT_FALSE(r.valid);
    EXPECT_NE(r.reason.find("valence: C with 5 bonds"), std::string::npos) << r.reason;
}

TEST(Validity, HandCases) {
    for (const char *ok : {"C", "O", "c1ccccc1", "c1cc[nH]c1", "O=[N+]([O-])c1ccoc1", "C#N",
                           "[NH4+]", "C1CC1", "CC(=O)O", "c1ccccc1-c1ccccc1", "[cH-]1cccc1",
                           "C%10CC%10", "C.C", "N[C@@H](C)C(=O)O", "F/C=C/F"}) {
        EXPECT_TRUE(check_validity(ok).valid) << ok << ": " << check_validity(ok).reason;
    }
    for (const char *bad : {"", "C(", "C)", "C()", "(C)", "C=", "C==C", "[C", "C[X]", "Cx",
                            "c1cccc1", "c1ccccc", "cC", "O=O=O", "F(F)F", "[O-2]C=O",
                            "C11", "1C", "C.", "N(=O)=O"}) {
        EXPECT_FALSE(check_validity(bad).valid) << bad;
    }
}

TEST(Validity, NoFalseNegativesOnCorpus) {
    for (const auto &r : read_corpus()) {
        const auto v = check_validity(r.smiles);
        EXPECT_TRUE(v.valid) << r.smiles << ": " << v.reason;
    }
}

TEST(Validity, RandomMutationsNeverCrash) {
    // Property: the checker is total, whatever bytes it is given.
    const auto rows = read_corpus();
    const std::string alphabet = "CNOFcno()[]=#-+123456%.@H";
    Rng rng(7, Purpose::Test, 0);
    std::size_t invalid = 0;
    for (int t = 0; t < 2000; ++t) {
        std::string s = rows[rng.below(rows.size())].smiles;
        const auto at = rng.below(s.size());
        s[at] = alphabet[rng.below(alphabet.size())];
        const auto r = check_validity(s);
        EXPECT_EQ(r.valid, r.reason.empty());
        invalid += r.valid ? 0 : 1;
    }
    EXPECT_GT(invalid, 0U);
}

TEST(Descriptors, Methane) {
    const auto d = descriptors("C");
    EXPECT_NEAR(d.mw, 16.04, 0.005);
    EXPECT_EQ(d.hba, 0);
    EXPECT_EQ(d.hbd, 0);
    EXPECT_EQ(d.n_rot, 0);
    EXPECT_EQ(d.n_ring, 0);
    EXPECT_EQ(d.n_het, 0);
    EXPECT_FALSE(d.get(Property::TPSA).has_value());
    EXPECT_FALSE(d.get(Property::logP).has_value());
    EXPECT_FALSE(d.get(Property::Stereo).has_value());
}

TEST(Descriptors, Water) {
    const auto d = descriptors("O");
    EXPECT_NEAR(d.mw, 18.02, 0.005);
    EXPECT_EQ(d.hba, 1);
    EXPECT_EQ(d.hbd, 1);
}

TEST(Descriptors, HandCases) {
    EXPECT_EQ(descriptors("CCCC").n_rot, 1);
    EXPECT_EQ(descriptors("CC#CC").n_rot, 0);
    EXPECT_EQ(descriptors("c1ccccc1").n_ring, 1);
    EXPECT_EQ(descriptors("C1CC2CC1C2").n_ring, 2);
    EXPECT_NEAR(descriptors("c1ccccc1").mw, 6 * 12.011 + 6 * 1.008, 1e-9);
    EXPECT_EQ(descriptors("[NH3+]CC(=O)[O-]").hbd, 1);
    EXPECT_EQ(descriptors("c1cc[nH]c1").hbd, 1);
    EXPECT_EQ(descriptors("ClCF").n_het, 2);
}

TEST(Descriptors, MatchCorpusColumns) {
    const auto rows = read_corpus();
    for (const auto &r : rows) {
        const auto d = descriptors(r.smiles);
        EXPECT_NEAR(d.mw, r.props[0], 0.05) << r.smiles;
        EXPECT_EQ(d.hba, static_cast<int>(r.props[1])) << r.smiles;
        EXPECT_EQ(d.hbd, static_cast<int>(r.props[2])) << r.smiles;
        EXPECT_EQ(d.n_rot, static_cast<int>(r.props[3])) << r.smiles;
        EXPECT_EQ(d.n_ring, static_cast<int>(r.props[4])) << r.smiles;
        EXPECT_EQ(d.n_het, static_cast<int>(r.props[5])) << r.smiles;
    }
}

TEST(Descriptors, CyclomaticIdentity) {
    for (const auto &r : read_corpus()) {
        const auto m = analyze(r.smiles);
        const int want = static_cast<int>(m.graph.bonds.size()) -
                         static_cast<int>(m.graph.atoms.size()) +
                         static_cast<int>(m.graph.fragments);
        EXPECT_EQ(descriptors(m).n_ring, want);
    }
    const auto g = parse("CC.O.N");
    ASSERT_TRUE(g.graph.has_value());
    EXPECT_EQ(g.graph->fragments, 3U);
}

TEST(Descriptors, InvalidMoleculeThrows) {
    EXPECT_THROW((void)descriptors("C1CC"), ValidationError);
}

TEST(Metrics, HandCount) {
    const std::vector<std::string> gen{"C", "C", "Cx"};
    const auto m = generation_metrics(gen, {"C"});
    EXPECT_NEAR(m.validity, 200.0 / 3.0, 1e-9);
    EXPECT_NEAR(m.uniqueness, 50.0, 1e-9);
    EXPECT_NEAR(m.validity_x_uniqueness, 100.0 / 3.0, 1e-9);
    EXPECT_NEAR(m.novelty, 0.0, 1e-12);
    EXPECT_FALSE(m.undefined_ratios);
}

TEST(Metrics, AllInvalidFlagsUndefinedRatios) {
    const std::vector<std::string> gen{"C(", "Cx"};
    const auto m = generation_metrics(gen, {});
    EXPECT_EQ(m.validity, 0.0);
    EXPECT_EQ(m.uniqueness, 0.0);
    EXPECT_EQ(m.novelty, 0.0);
    EXPECT_TRUE(m.undefined_ratios);
    std::ostringstream table;
    write_metrics_table(table, m);
    EXPECT_NE(table.str().find("undefined"), std::string::npos);
}

TEST(Metrics, AllNovel) {
    const std::vector<std::string> gen{"CC", "CO", "CN"};
    const auto m = generation_metrics(gen, {"C"});
    EXPECT_EQ(m.validity, 100.0);
    EXPECT_EQ(m.uniqueness, 100.0);
    EXPECT_EQ(m.validity_x_uniqueness, 100.0);
    EXPECT_EQ(m.novelty, 100.0);
}

TEST(Metrics, EmptyInputRejected) {
    EXPECT_THROW((void)generation_metrics({}, {}), ValidationError);
}

TEST(Metrics, OrderInvariant) {
    // Property: metrics do not depend on sample order.
    const auto rows = read_corpus();
    Rng rng(3, Purpose::Test, 1);
    std::vector<std::string> gen;
    for (int i = 0; i < 200; ++i) {
        gen.push_back(i % 3 == 0 ? "C(" : rows[rng.below(50)].smiles);
    }
    std::unordered_set<std::string> train{rows[0].smiles, rows[1].smiles};
    const auto a = generation_metrics(gen, train);
    std::reverse(gen.begin(), gen.end());
    const auto b = generation_metrics(gen, train);
    EXPECT_EQ(a.validity, b.validity);
    EXPECT_EQ(a.uniqueness, b.uniqueness);
    EXPECT_EQ(a.novelty, b.novelty);
}

TEST(Metrics, CsvHasHeaderAndRow) {
    const std::vector<std::string> gen{"C"};
    std::ostringstream out;
    write_metrics_csv(out, generation_metrics(gen, {}));
    EXPECT_EQ(out.str().substr(0, 12), "total,valid,");
    EXPECT_NE(out.str().find("\n1,1,1,1,100.000000"), std::string::npos);
}

} // namespace
} // namespace qattn::smiles
