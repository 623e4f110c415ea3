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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vfedssd/data/schema.hpp"

namespace vfedssd {

/// Bucket of a categorical value: FNV-1a-64(name 0x1F raw) mod buckets.
std::size_t hash_feature(const FieldSpec& field, std::string_view raw);

/// Encodes raw string rows of one party into numeric rows: categorical
/// values become bucket indices, numerical values are standardized with
/// statistics fitted on training rows. Missing numericals ("") encode to 0;
/// a missing categorical is hashed like any other string.
class FeatureEncoder {
 public:
  explicit FeatureEncoder(PartySchema schema);

  /// Fits mean / standard deviation of every numerical field.
  void fit(const std::vector<std::vector<std::string>>& rows);

  std::vector<float> encode(std::span<const std::string> raw) const;

  /// A raw row that encodes back to the same values. Categorical buckets map
  /// to a fixed representative string of that bucket.
  std::vector<std::string> decode(std::span<const float> encoded) const;

  const PartySchema& schema() const { return schema_; }
  double mean(std::size_t field) const { return mean_[field]; }
  double scale(std::size_t field) const { return scale_[field]; }

 private:
  PartySchema schema_;
  std::vector<double> mean_;
  std::vector<double> scale_;
};

/// Parses a finite decimal number; false for empty or malformed text.
bool parse_number(std::string_view text, double& out);

}  // namespace vfedssd
