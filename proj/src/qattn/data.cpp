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
#include "qattn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <unordered_set>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "qattn/error.hpp"
#include "qattn/rng.hpp"

namespace qattn::data {

namespace {

constexpr std::string_view kHeader = "SMILES,MW,HBA,HBD,nRot,nRing,nHet,TPSA,logP,Stereo";

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) {
            return cells;
        }
        start = comma + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

/// Parses a full cell as a double; "nan"/"inf" parse and are caught later.
std::optional<double> parse_double(std::string_view cell) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+') {
        cell.remove_prefix(1);
    }
    double v = 0.0;
    const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || end != cell.data() + cell.size() || cell.empty()) {
        return std::nullopt;
    }
    return v;
}

double quantile(const std::vector<double> &sorted, double p) {
    const double rank = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (rank - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace

std::vector<std::size_t> Dataset::indices(Split which) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i) {
        if (split[i] == which) {
            out.push_back(i);
        }
    }
    return out;
}

std::size_t Dataset::count(Split which) const {
    return static_cast<std::size_t>(std::count(split.begin(), split.end(), which));
}

std::size_t validation_size(std::size_t n) { return (2 * n + 21) / 42; }

Dataset ingest(std::istream &in, const IngestOptions &options) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != kHeader) {
        throw DataError("line 1: expected header " + std::string(kHeader));
    }
    Dataset ds;
    std::unordered_set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_commas(line);
        if (cells.size() != 1 + smiles::kNumProperties) {
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(1 + smiles::kNumProperties) + " columns, found " +
                            std::to_string(cells.size()));
        }
        Record r;
        r.smiles = std::string(trim(cells[0]));
        if (r.smiles.empty()) {
            throw DataError("line " + std::to_string(line_no) + ": empty SMILES");
        }
        bool finite = true;
        for (std::size_t p = 0; p < smiles::kNumProperties; ++p) {
            const auto v = parse_double(cells[p + 1]);
            if (!v) {
                throw DataError("line " + std::to_string(line_no) + ": column " +
                                std::string(smiles::kPropertyNames[p]) + " is not a number");
            }
            r.props[p] = *v;
            finite = finite && std::isfinite(*v);
        }
        ++ds.report.rows_read;
        if (!finite) {
            ++ds.report.nonfinite_rejected;
            spdlog::warn("line {}: non-finite property, row rejected", line_no);
            continue;
        }
        if (!seen.insert(r.smiles).second) {
            ++ds.report.duplicates_dropped;
            continue;
        }
        if (options.max_records && ds.records.size() >= *options.max_records) {
            continue;
        }
        ds.records.push_back(std::move(r));
    }
    if (ds.report.duplicates_dropped > 0) {
        spdlog::info("dropped {} duplicate SMILES", ds.report.duplicates_dropped);
    }

    const std::size_t n = ds.records.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(options.seed, Purpose::Split);
    for (std::size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }
    ds.split.assign(n, Split::Train);
    for (std::size_t i = 0; i < validation_size(n); ++i) {
        ds.split[order[i]] = Split::Val;
    }

    std::vector<std::string> all;
    all.reserve(n);
    for (const auto &r : ds.records) {
        all.push_back(r.smiles);
    }
    ds.vocab = smiles::Vocabulary::from_corpus(all);
    if (ds.vocab != smiles::Vocabulary::qm9()) {
        spdlog::info("corpus vocabulary extends the QM9 alphabet to {} tokens", ds.vocab.size());
    }
    return ds;
}

Dataset ingest(const std::filesystem::path &path, const IngestOptions &options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read " + path.string());
    }
    return ingest(in, options);
}

void write_split_manifest(std::ostream &out, const Dataset &ds) {
    out << "index,smiles,split\n";
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        out << i << ',' << ds.records[i].smiles << ','
            << (ds.split[i] == Split::Train ? "train" : "val") << '\n';
    }
}

PropertyStats column_stats(std::span<const double> values) {
    QATTN_REQUIRE(!values.empty(), "statistics need at least one value");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    PropertyStats s;
    s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : sorted) {
        ss += (v - s.mean) * (v - s.mean);
    }
    s.stddev = sorted.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    s.median = quantile(sorted, 0.5);
    s.q1 = quantile(sorted, 0.25);
    s.q3 = quantile(sorted, 0.75);
    s.iqr = s.q3 - s.q1;
    s.min = sorted.front();
    s.max = sorted.back();

    // Bin on integer hundredths so equal rounded values compare exactly.
    std::map<long long, std::size_t> bins;
    for (double v : sorted) {
        ++bins[std::llround(v * 100.0)];
    }
    long long best = bins.begin()->first;
    std::size_t best_count = 0;
    for (const auto &[bin, c] : bins) {
        if (c > best_count) {
            best = bin;
            best_count = c;
        }
    }
    s.mode = static_cast<double>(best) / 100.0;
    return s;
}

std::array<PropertyStats, smiles::kNumProperties> property_stats(const Dataset &ds) {
    const auto train = ds.indices(Split::Train);
    QATTN_REQUIRE(!train.empty(), "property statistics need a non-empty training split");
    std::array<PropertyStats, smiles::kNumProperties> out;
    std::vector<double> col(train.size());
    for (std::size_t p = 0; p < smiles::kNumProperties; ++p) {
        for (std::size_t i = 0; i < train.size(); ++i) {
            col[i] = ds.records[train[i]].props[p];
        }
        out[p] = column_stats(col);
    }
    return out;
}

void write_stats(std::ostream &out,
                 const std::array<PropertyStats, smiles::kNumProperties> &stats) {
    nlohmann::ordered_json j;
    for (std::size_t p = 0; p < smiles::kNumProperties; ++p) {
        const auto &s = stats[p];
        j[std::string(smiles::kPropertyNames[p])] = {
            {"mean", s.mean}, {"median", s.median}, {"mode", s.mode}, {"std", s.stddev},
            {"q1", s.q1},     {"q3", s.q3},         {"iqr", s.iqr},   {"min", s.min},
            {"max", s.max}};
    }
    out << j.dump(2) << '\n';
}

AngleRange range_of(std::span<const std::vector<double>> rows) {
    QATTN_REQUIRE(!rows.empty(), "range of an empty batch");
    AngleRange r{rows[0], rows[0]};
    for (const auto &row : rows) {
        QATTN_REQUIRE(row.size() == r.min.size(), "rows differ in length");
        for (std::size_t d = 0; d < row.size(); ++d) {
            r.min[d] = std::min(r.min[d], row[d]);
            r.max[d] = std::max(r.max[d], row[d]);
        }
    }
    return r;
}

ScaledAngles scale_to_angle(std::span<const double> values, const AngleRange &range) {
    QATTN_REQUIRE(range.min.size() == values.size() && range.max.size() == values.size(),
                  "angle range dimension does not match values");
    ScaledAngles out;
    out.angles.resize(values.size());
    for (std::size_t d = 0; d < values.size(); ++d) {
        const double lo = range.min[d];
        const double hi = range.max[d];
        if (!(hi > lo)) {
            spdlog::warn("degenerate angle range in dimension {} ({} .. {}); mapping to pi/2", d,
                         lo, hi);
            out.angles[d] = std::numbers::pi / 2.0;
            continue;
        }
        double t = (values[d] - lo) / (hi - lo);
        if (t < 0.0 || t > 1.0) {
            out.clamped = true;
            t = std::clamp(t, 0.0, 1.0);
        }
        out.angles[d] = std::numbers::pi * t;
    }
    return out;
}

PropertyVector knn_impute(const Dataset &ds, smiles::Property property, double target,
                          std::size_t k) {
    QATTN_REQUIRE(k >= 1, "k must be at least 1");
    const auto train = ds.indices(Split::Train);
    if (train.empty()) {
        throw DataError("k-NN imputation needs a non-empty training split");
    }
    const auto p = static_cast<std::size_t>(property);
    std::vector<std::size_t> order = train;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(ds.records[a].props[p] - target) <
               std::abs(ds.records[b].props[p] - target);
    });
    order.resize(std::min(k, order.size()));
    PropertyVector out{};
    for (std::size_t i : order) {
        for (std::size_t q = 0; q < smiles::kNumProperties; ++q) {
            out[q] += ds.records[i].props[q];
        }
    }
    for (auto &v : out) {
        v /= static_cast<double>(order.size());
    }
    out[p] = target;
    return out;
}

} // namespace qattn::data
