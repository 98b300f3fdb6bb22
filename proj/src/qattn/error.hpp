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

#include <stdexcept>
#include <string>

namespace qattn {

/// Bad arguments: index collisions, shape mismatches, inconsistent configs.
class ValidationError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Request exceeds a hard resource guard (e.g. too many qubits).
class ResourceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unreadable input files (datasets, checkpoints, vocabularies).
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A SMILES string contained a substring not covered by the vocabulary.
class TokenizationError : public DataError {
  public:
    TokenizationError(const std::string &smiles, std::size_t offset)
        : DataError("cannot tokenize '" + smiles + "' at offset " +
                    std::to_string(offset)),
          offset_(offset) {}
    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

  private:
    std::size_t offset_;
};

#define QATTN_REQUIRE(cond, msg)                                               \
    do {                                                                       \
        if (!(cond)) {                                                         \
            throw ::qattn::ValidationError(msg);                               \
        }                                                                      \
    } while (0)

} // namespace qattn
