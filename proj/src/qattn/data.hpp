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
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qattn/smiles.hpp"

namespace qattn::data {

using PropertyVector = std::array<double, smiles::kNumProperties>;

struct Record {
    std::string smiles;
    PropertyVector props{};
};

enum class Split : std::uint8_t { Train, Val };

struct IngestOptions {
    std::uint64_t seed = 0;
    /// Keep only the first N unique rows (file order) before splitting.
    std::optional<std::size_t> max_records;
};

struct IngestReport {
    std::size_t rows_read = 0;
    std::size_t duplicates_dropped = 0;
    std::size_t nonfinite_rejected = 0;
};

/**
 * @brief Unique records with a seeded 20:1 train/validation split.
 *
 * Records keep file order; `split[i]` tags record i. The vocabulary is
 * derived from every retained SMILES.
 */
struct Dataset {
    std::vector<Record> records;
    std::vector<Split> split;
    IngestReport report;
    smiles::Vocabulary vocab = smiles::Vocabulary::qm9();

    [[nodiscard]] std::vector<std::size_t> indices(Split which) const;
    [[nodiscard]] std::size_t count(Split which) const;
};

/// Header must be SMILES,MW,HBA,HBD,nRot,nRing,nHet,TPSA,logP,Stereo.
/// Malformed rows throw DataError naming the 1-based line; rows with a
/// non-finite property are skipped with a warning.
Dataset ingest(const std::filesystem::path &path, const IngestOptions &options = {});
Dataset ingest(std::istream &in, const IngestOptions &options = {});

/// Validation size for n unique records: round(n / 21).
std::size_t validation_size(std::size_t n);

/// index,smiles,split rows for every record.
void write_split_manifest(std::ostream &out, const Dataset &ds);

struct PropertyStats {
    double mean = 0.0;
    double median = 0.0;
    /// Most frequent value after rounding to 2 decimals; ties go to the smallest.
    double mode = 0.0;
    /// Sample standard deviation (n - 1); 0 for a single value.
    double stddev = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double iqr = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Statistics of one column; quartiles interpolate linearly between order
/// statistics at rank p * (n - 1).
PropertyStats column_stats(std::span<const double> values);

/// Per-property statistics over TRAIN records only.
std::array<PropertyStats, smiles::kNumProperties> property_stats(const Dataset &ds);

/// JSON object keyed by property name.
void write_stats(std::ostream &out,
                 const std::array<PropertyStats, smiles::kNumProperties> &stats);

/// Frozen per-dimension bounds for the angle map.
struct AngleRange {
    std::vector<double> min;
    std::vector<double> max;
};

/// Elementwise bounds over a batch of equal-length rows.
AngleRange range_of(std::span<const std::vector<double>> rows);

struct ScaledAngles {
    std::vector<double> angles;
    /// Set when any value fell outside its frozen range and was clamped.
    bool clamped = false;
};

/**
 * @brief Affine map of each dimension from [min, max] onto [0, pi].
 *
 * Out-of-range values clamp to the interval ends. A dimension with
 * max <= min maps to pi/2 and logs a warning.
 */
ScaledAngles scale_to_angle(std::span<const double> values, const AngleRange &range);

/**
 * @brief Fills a property vector from the k training rows nearest to
 * `target` in one property.
 *
 * Distance is |row[property] - target|; equal distances keep record order.
 * The target slot holds `target`; every other slot is the uniform mean over
 * the neighbors. k larger than the training set uses the whole set.
 */
PropertyVector knn_impute(const Dataset &ds, smiles::Property property, double target,
                          std::size_t k = 5);

} // namespace qattn::data
