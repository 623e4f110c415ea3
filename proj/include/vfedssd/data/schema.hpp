// Copyright 2026 The VFedSSD Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vfedssd {

enum class Party { A, B };

inline std::string_view party_name(Party p) { return p == Party::A ? "A" : "B"; }

enum class FieldKind { Categorical, Numerical };

/// Largest bucket count whose indices are exactly representable in a float
/// feature matrix.
inline constexpr std::size_t kMaxBuckets = std::size_t{1} << 24;

struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::Numerical;
  std::size_t buckets = 0;    // categorical only
  std::size_t embed_dim = 0;  // categorical only

  static FieldSpec numerical(std::string name) { return {std::move(name), FieldKind::Numerical, 0, 0}; }
  static FieldSpec categorical(std::string name, std::size_t buckets, std::size_t dim) {
    return {std::move(name), FieldKind::Categorical, buckets, dim};
  }

  /// Width this field contributes to the bottom-model input.
  std::size_t input_width() const { return kind == FieldKind::Categorical ? embed_dim : 1; }

  void validate() const;
};

/// Ordered field list of one party. An encoded row holds one value per field
/// (bucket index for categoricals, standardized value for numericals).
struct PartySchema {
  Party party = Party::A;
  std::vector<FieldSpec> fields;

  std::size_t width() const { return fields.size(); }
  /// Sum of embed_dim over categorical fields plus the number of numerical
  /// fields.
  std::size_t post_embed_dim() const;
  std::size_t index_of(std::string_view name) const;
  bool has_categorical() const;

  void validate() const;

  /// Canonical text form, e.g.
  ///   party A
  ///   categorical game_id buckets=1000 dim=8
  ///   numerical age
  std::string to_text() const;
  static PartySchema parse(std::string_view text);
  static PartySchema load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::uint64_t hash() const;
};

}  // namespace vfedssd
