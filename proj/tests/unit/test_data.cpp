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
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "qattn/data.hpp"
#include "qattn/error.hpp"
#include "qattn/rng.hpp"

namespace qattn::data {
namespace {

using smiles::Property;

constexpr const char *kHeader = "SMILES,MW,HBA,HBD,nRot,nRing,nHet,TPSA,logP,Stereo\n";

/// CSV with rows "C...C" (i+1 carbons) and property p = i * (p + 1).
std::string toy_csv(std::size_t n) {
    std::string s = kHeader;
    for (std::size_t i = 0; i < n; ++i) {
        s += std::string(i + 1, 'C');
        for (std::size_t p = 0; p < smiles::kNumProperties; ++p) {
            s += "," + std::to_string(static_cast<double>(i * (p + 1)));
        }
        s += "\n";
    }
    return s;
}

Dataset ingest_string(const std::string &csv, const IngestOptions &opt = {}) {
    std::istringstream in(csv);
    return ingest(in, opt);
}

TEST(Ingest, TwentyOneRowsSplitTwentyToOne) {
    const auto ds = ingest_string(toy_csv(21));
    EXPECT_EQ(ds.records.size(), 21U);
    EXPECT_EQ(ds.count(Split::Train), 20U);
    EXPECT_EQ(ds.count(Split::Val), 1U);
}

TEST(Ingest, SplitRatioHoldsAcrossSizes) {
    for (std::size_t n : {1U, 2U, 10U, 42U, 100U, 3000U}) {
        const auto ds = ingest_string(toy_csv(std::min<std::size_t>(n, 200)));
        const std::size_t m = ds.records.size();
        EXPECT_EQ(ds.count(Split::Val), validation_size(m));
        EXPECT_LE(std::abs(static_cast<double>(ds.count(Split::Val)) -
                           static_cast<double>(m) / 21.0),
                  0.5);
    }
}

TEST(Ingest, DuplicateDroppedAndCounted) {
    std::string csv = toy_csv(5);
    csv += "CC,1,1,1,1,1,1,1,1,1\n";
    const auto ds = ingest_string(csv);
    EXPECT_EQ(ds.records.size(), 5U);
    EXPECT_EQ(ds.report.duplicates_dropped, 1U);
    EXPECT_EQ(ds.records[1].props[0], 1.0); // first occurrence kept
}

TEST(Ingest, MalformedRowNamesLine) {
    std::string csv = toy_csv(3) + "CCCC,1,2,3\n";
    try {
        (void)ingest_string(csv);
        FAIL() << "expected a data error";
    } catch (const DataError &e) {
        EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos) << e.what();
    }
    EXPECT_THROW((void)ingest_string(toy_csv(2) + "CCC,1,x,3,4,5,6,7,8,9\n"), DataError);
    EXPECT_THROW((void)ingest_string("smiles,a\nC,1\n"), DataError);
}

TEST(Ingest, NonFiniteRowRejected) {
    std::string csv = toy_csv(3) + "CCCC,nan,1,1,1,1,1,1,1,1\nCCCCC,1,inf,1,1,1,1,1,1,1\n";
    const auto ds = ingest_string(csv);
    EXPECT_EQ(ds.records.size(), 3U);
    EXPECT_EQ(ds.report.nonfinite_rejected, 2U);
}

TEST(Ingest, MaxRecordsKeepsFilePrefix) {
    IngestOptions opt;
    opt.max_records = 4;
    const auto ds = ingest_string(toy_csv(10), opt);
    ASSERT_EQ(ds.records.size(), 4U);
    EXPECT_EQ(ds.records[3].smiles, "CCCC");
}

TEST(Ingest, SplitIsDeterministicPerSeed) {
    IngestOptions a;
    a.seed = 11;
    const auto x = ingest_string(toy_csv(200), a);
    const auto y = ingest_string(toy_csv(200), a);
    EXPECT_EQ(x.split, y.split);
    IngestOptions b;
    b.seed = 12;
    EXPECT_NE(ingest_string(toy_csv(200), b).split, x.split);
}

TEST(Ingest, ShippedCorpusIsQm9Alphabet) {
    const auto ds = ingest(std::string(QATTN_DATA_DIR) + "/qm9_like.csv");
    EXPECT_EQ(ds.records.size(), 3000U);
    EXPECT_EQ(ds.report.duplicates_dropped, 0U);
    EXPECT_EQ(ds.vocab, smiles::Vocabulary::qm9());
}

TEST(Ingest, ManifestListsEveryRecord) {
    const auto ds = ingest_string(toy_csv(21));
    std::ostringstream out;
    write_split_manifest(out, ds);
    const std::string s = out.str();
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 22);
    EXPECT_EQ(s.substr(0, 19), "index,smiles,split\n");
    std::size_t vals = 0;
    for (std::size_t pos = 0; (pos = s.find(",val\n", pos)) != std::string::npos; ++pos) {
        ++vals;
    }
    EXPECT_EQ(vals, 1U);
}

TEST(Stats, ConstantColumn) {
    const std::vector<double> v(7, 3.25);
    const auto s = column_stats(v);
    EXPECT_EQ(s.stddev, 0.0);
    EXPECT_EQ(s.iqr, 0.0);
    EXPECT_EQ(s.mean, 3.25);
    EXPECT_EQ(s.median, 3.25);
    EXPECT_EQ(s.mode, 3.25);
}

TEST(Stats, OneToFour) {
    const std::vector<double> v{4, 1, 3, 2};
    const auto s = column_stats(v);
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_DOUBLE_EQ(s.median, 2.5);
    EXPECT_DOUBLE_EQ(s.q1, 1.75);
    EXPECT_DOUBLE_EQ(s.q3, 3.25);
    EXPECT_DOUBLE_EQ(s.iqr, 1.5);
    EXPECT_DOUBLE_EQ(s.stddev, std::sqrt(5.0 / 3.0));
}

TEST(Stats, ModeRoundsAndBreaksTiesLow) {
    const std::vector<double> v{1.004, 0.996, 2.0, 2.001, 5.0};
    EXPECT_DOUBLE_EQ(column_stats(v).mode, 1.0);
    const std::vector<double> w{7.0, 3.0, 7.0, 3.0};
    EXPECT_DOUBLE_EQ(column_stats(w).mode, 3.0);
}

TEST(Stats, InvariantUnderPermutation) {
    Rng rng(5, Purpose::Test);
    std::vector<double> v(301);
    for (auto &x : v) {
        x = std::round(rng.uniform(-10, 10) * 10.0) / 10.0;
    }
    const auto a = column_stats(v);
    for (int t = 0; t < 20; ++t) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[rng.below(i)]);
        }
        const auto b = column_stats(v);
        EXPECT_NEAR(a.mean, b.mean, 1e-12);
        EXPECT_EQ(a.median, b.median);
        EXPECT_EQ(a.mode, b.mode);
        EXPECT_EQ(a.iqr, b.iqr);
        EXPECT_NEAR(a.stddev, b.stddev, 1e-12);
    }
}

TEST(Stats, UsesTrainOnly) {
    const auto ds = ingest_string(toy_csv(21));
    const auto train = ds.indices(Split::Train);
    std::vector<double> col;
    for (auto i : train) {
        col.push_back(ds.records[i].props[0]);
    }
    EXPECT_EQ(property_stats(ds)[0].mean, column_stats(col).mean);
    std::ostringstream out;
    write_stats(out, property_stats(ds));
    const auto j = nlohmann::json::parse(out.str());
    EXPECT_EQ(j.size(), 9U);
    EXPECT_DOUBLE_EQ(j["MW"]["mean"].get<double>(), column_stats(col).mean);
}

TEST(Angles, EndpointsAndMidpoint) {
    const AngleRange r{{0.0, -2.0}, {10.0, 2.0}};
    const std::vector<double> lo{0.0, -2.0};
    const std::vector<double> hi{10.0, 2.0};
    const std::vector<double> mid{5.0, 0.0};
    EXPECT_EQ(scale_to_angle(lo, r).angles, (std::vector<double>{0.0, 0.0}));
    EXPECT_DOUBLE_EQ(scale_to_angle(hi, r).angles[0], std::numbers::pi);
    EXPECT_DOUBLE_EQ(scale_to_angle(mid, r).angles[1], std::numbers::pi / 2);
    EXPECT_FALSE(scale_to_angle(mid, r).clamped);
}

TEST(Angles, OutOfRangeClampsAndFlags) {
    const AngleRange r{{0.0}, {1.0}};
    const std::vector<double> above{3.0};
    const std::vector<double> below{-1.0};
    const auto a = scale_to_angle(above, r);
    EXPECT_TRUE(a.clamped);
    EXPECT_DOUBLE_EQ(a.angles[0], std::numbers::pi);
    EXPECT_EQ(scale_to_angle(below, r).angles[0], 0.0);
}

TEST(Angles, DegenerateRangeMapsToHalfPi) {
    const AngleRange r{{2.0}, {2.0}};
    const std::vector<double> v{2.0};
    EXPECT_DOUBLE_EQ(scale_to_angle(v, r).angles[0], std::numbers::pi / 2);
}

TEST(Angles, RangeOfBatchAndBoundsProperty) {
    Rng rng(9, Purpose::Test);
    std::vector<std::vector<double>> rows(50, std::vector<double>(3));
    for (auto &row : rows) {
        for (auto &x : row) {
            x = rng.uniform(-5, 5);
        }
    }
    const auto r = range_of(rows);
    for (const auto &row : rows) {
        const auto s = scale_to_angle(row, r);
        EXPECT_FALSE(s.clamped);
        for (double a : s.angles) {
            EXPECT_GE(a, 0.0);
            EXPECT_LE(a, std::numbers::pi);
        }
    }
}

TEST(Knn, KOneReproducesRow) {
    const auto ds = ingest(std::string(QATTN_DATA_DIR) + "/qm9_like.csv");
    const auto train = ds.indices(Split::Train);
    Rng rng(4, Purpose::Test);
    for (int t = 0; t < 50; ++t) {
        const auto idx = train[rng.below(train.size())];
        // MW is near-unique, so the nearest row is the row itself or an exact tie.
        const double mw = ds.records[idx].props[0];
        const auto got = knn_impute(ds, Property::MW, mw, 1);
        std::size_t first = idx;
        for (auto i : train) {
            if (ds.records[i].props[0] == mw) {
                first = i;
                break;
            }
        }
        for (std::size_t q = 0; q < smiles::kNumProperties; ++q) {
            EXPECT_EQ(got[q], ds.records[first].props[q]);
        }
    }
}

TEST(Knn, KEqualsTrainGivesColumnMeans) {
    const auto ds = ingest_string(toy_csv(42));
    const auto train = ds.indices(Split::Train);
    const auto got = knn_impute(ds, Property::HBA, 123.0, train.size());
    EXPECT_EQ(got[1], 123.0);
    for (std::size_t q = 0; q < smiles::kNumProperties; ++q) {
        if (q == 1) {
            continue;
        }
        double sum = 0.0;
        for (auto i : train) {
            sum += ds.records[i].props[q];
        }
        EXPECT_NEAR(got[q], sum / static_cast<double>(train.size()), 1e-9);
    }
}

TEST(Knn, ToyMatchesBruteForceSort) {
    std::string csv = kHeader;
    const std::vector<double> key{5, 1, 4, 2, 8, 3, 3, 7};
    for (std::size_t i = 0; i < key.size(); ++i) {
        csv += std::string(i + 1, 'C') + "," + std::to_string(key[i] * 10) + "," +
               std::to_string(key[i]) + ",0,0,0,0,0,0," + std::to_string(i) + "\n";
    }
    const auto ds = ingest_string(csv);
    const auto train = ds.indices(Split::Train);
    const double target = 3.4;
    // Oracle: all (distance, order) pairs sorted.
    std::vector<std::pair<double, std::size_t>> d;
    for (auto i : train) {
        d.emplace_back(std::abs(ds.records[i].props[1] - target), i);
    }
    std::sort(d.begin(), d.end());
    double mw = 0.0;
    double stereo = 0.0;
    for (int n = 0; n < 3; ++n) {
        mw += ds.records[d[n].second].props[0] / 3.0;
        stereo += ds.records[d[n].second].props[8] / 3.0;
    }
    const auto got = knn_impute(ds, Property::HBA, target, 3);
    EXPECT_NEAR(got[0], mw, 1e-12);
    EXPECT_NEAR(got[8], stereo, 1e-12);
    EXPECT_EQ(got[1], target);
}

TEST(Knn, Errors) {
    const auto ds = ingest_string(toy_csv(5));
    EXPECT_THROW((void)knn_impute(ds, Property::MW, 1.0, 0), ValidationError);
    Dataset empty;
    EXPECT_THROW((void)knn_impute(empty, Property::MW, 1.0, 5), DataError);
}

} // namespace
} // namespace qattn::data
