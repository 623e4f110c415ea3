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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vfedssd/numeric/layers.hpp"

namespace vfedssd {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Matrix value;
};

/// Named parameter tensors plus the fingerprints they were produced under.
/// File layout (little-endian): "VFCK" | version u32 | schema_hash u64 |
/// tag_hash u64 | count u32 | count x (name_len u32, name, rows u32,
/// cols u32, rows*cols f32).
struct Checkpoint {
  std::uint64_t schema_hash = 0;
  std::uint64_t tag_hash = 0;
  std::vector<NamedTensor> tensors;

  const Matrix* find(std::string_view name) const;
  bool has_prefix(std::string_view prefix) const;
  std::uint64_t digest() const;
};

Checkpoint capture(std::span<const ParamRef<float>> params, std::uint64_t schema_hash, std::uint64_t tag_hash);

/// Copies every tensor whose name starts with prefix into the matching
/// parameter. Throws StateError for a missing tensor and DimensionError for
/// a shape mismatch.
void apply_checkpoint(const Checkpoint& ckpt, std::span<const ParamRef<float>> params, std::string_view prefix = "");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Digest over parameter names and values, for tamper checks.
std::uint64_t params_digest(std::span<const ParamRef<float>> params);

/// Value copies of the parameters, in order.
std::vector<Matrix> snapshot_values(std::span<const ParamRef<float>> params);
void restore_values(std::span<const ParamRef<float>> params, const std::vector<Matrix>& values);

}  // namespace vfedssd
