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

#include "vfedssd/data/encoder.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "vfedssd/common/error.hpp"
#include "vfedssd/common/hash.hpp"

namespace vfedssd {

std::size_t hash_feature(const FieldSpec& field, std::string_view raw) {
  if (field.kind != FieldKind::Categorical) throw SchemaError("hash_feature on numerical field " + field.name);
  const std::uint64_t h = Fnv1a64{}.update(field.name).update_byte(0x1F).update(raw).digest();
  return static_cast<std::size_t>(h % field.buckets);
}

bool parse_number(std::string_view text, double& out) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

FeatureEncoder::FeatureEncoder(PartySchema schema)
    : schema_(std::move(schema)), mean_(schema_.width(), 0.0), scale_(schema_.width(), 1.0) {
  schema_.validate();
}

void FeatureEncoder::fit(const std::vector<std::vector<std::string>>& rows) {
  for (std::size_t f = 0; f < schema_.width(); ++f) {
    if (schema_.fields[f].kind != FieldKind::Numerical) continue;
    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    for (const auto& row : rows) {
      double v;
      if (!parse_number(row.at(f), v)) continue;
      sum += v;
      sum_sq += v * v;
      ++n;
    }
    if (n == 0) {
      mean_[f] = 0.0;
      scale_[f] = 1.0;
      continue;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
    mean_[f] = mean;
    scale_[f] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
}

std::vector<float> FeatureEncoder::encode(std::span<const std::string> raw) const {
  if (raw.size() != schema_.width()) {
    throw DataError("row has " + std::to_string(raw.size()) + " values, schema has " +
                    std::to_string(schema_.width()));
  }
  std::vector<float> out(raw.size());
  for (std::size_t f = 0; f < raw.size(); ++f) {
    const auto& field = schema_.fields[f];
    if (field.kind == FieldKind::Categorical) {
      out[f] = static_cast<float>(hash_feature(field, raw[f]));
      continue;
    }
    if (raw[f].empty()) {
      out[f] = 0.0f;
      continue;
    }
    double v;
    if (!parse_number(raw[f], v)) throw DataError("field " + field.name + ": not a number: '" + raw[f] + "'");
    out[f] = static_cast<float>((v - mean_[f]) / scale_[f]);
  }
  return out;
}

std::vector<std::string> FeatureEncoder::decode(std::span<const float> encoded) const {
  if (encoded.size() != schema_.width()) throw DataError("encoded row width does not match schema");
  std::vector<std::string> out(encoded.size());
  for (std::size_t f = 0; f < encoded.size(); ++f) {
    const auto& field = schema_.fields[f];
    if (field.kind == FieldKind::Categorical) {
      const auto bucket = static_cast<std::size_t>(encoded[f]);
      for (std::uint64_t n = 0;; ++n) {
        std::string candidate = "~" + std::to_string(n);
        if (hash_feature(field, candidate) == bucket) {
          out[f] = std::move(candidate);
          break;
        }
      }
      continue;
    }
    const double raw = static_cast<double>(encoded[f]) * scale_[f] + mean_[f];
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), raw);
    out[f].assign(buf, res.ptr);
  }
  return out;
}

}  // namespace vfedssd
