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
#include <span>
#include <vector>

#include "vfedssd/common/rng.hpp"
#include "vfedssd/numeric/matrix.hpp"

namespace vfedssd {

/// Permutation without fixed points: mapping[i] is the source row placed at
/// destination row i, and mapping[i] != i.
struct DerangementPermutation {
  std::vector<std::size_t> mapping;

  std::size_t size() const { return mapping.size(); }
  /// True if mapping is a permutation of 0..n-1 with no fixed point.
  bool valid() const;
};

/// Uniform over all derangements of n (rejection sampling of uniform
/// shuffles). Throws ValidationError for n < 2.
DerangementPermutation sample_derangement(std::size_t n, Rng& rng);
DerangementPermutation sample_derangement(std::size_t n, std::uint64_t seed);

/// Derangement whose source rows are drawn sequentially without replacement
/// with probability proportional to weights, skipping the destination's own
/// row; if the last destination is left with only itself, it swaps with a
/// random earlier destination.
DerangementPermutation sample_weighted_derangement(std::span<const double> weights, Rng& rng);

/// In-batch counts of identical rows, P_D(x) = #(x) / |D|.
struct EmpiricalUnigram {
  std::vector<std::size_t> counts;   // per row: rows of the batch equal to it
  std::vector<double> probabilities;  // per row: counts / n

  static EmpiricalUnigram from_rows(const Matrix& x);
};

}  // namespace vfedssd
