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

#include "vfedssd/mpd/derangement.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <numeric>
#include <string>

#include "vfedssd/common/error.hpp"

namespace vfedssd {

bool DerangementPermutation::valid() const {
  std::vector<char> seen(mapping.size(), 0);
  for (std::size_t i = 0; i < mapping.size(); ++i) {
    const std::size_t s = mapping[i];
    if (s >= mapping.size() || s == i || seen[s]) return false;
    seen[s] = 1;
  }
  return mapping.size() >= 2;
}

DerangementPermutation sample_derangement(std::size_t n, Rng& rng) {
  if (n < 2) throw ValidationError("no derangement of " + std::to_string(n) + " rows exists");
  DerangementPermutation p;
  p.mapping.resize(n);
  while (true) {
    std::iota(p.mapping.begin(), p.mapping.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(p.mapping));
    bool fixed = false;
    for (std::size_t i = 0; i < n && !fixed; ++i) fixed = p.mapping[i] == i;
    if (!fixed) return p;
  }
}

DerangementPermutation sample_derangement(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_derangement(n, rng);
}

DerangementPermutation sample_weighted_derangement(std::span<const double> weights, Rng& rng) {
  const std::size_t n = weights.size();
  if (n < 2) throw ValidationError("no derangement of " + std::to_string(n) + " rows exists");
  for (double w : weights) {
    if (!(w > 0.0)) throw ValidationError("derangement weights must be positive");
  }
  DerangementPermutation p;
  p.mapping.assign(n, 0);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t s : pool) {
      if (s != i) total += weights[s];
    }
    if (total == 0.0) {
      // Only row i itself is left: exchange with an earlier destination.
      const std::size_t d = static_cast<std::size_t>(rng.below(i));
      p.mapping[i] = p.mapping[d];
      p.mapping[d] = i;
      break;
    }
    double u = rng.uniform() * total;
    std::size_t pick = pool.size();
    for (std::size_t k = 0; k < pool.size(); ++k) {
      if (pool[k] == i) continue;
      pick = k;
      u -= weights[pool[k]];
      if (u < 0.0) break;
    }
    p.mapping[i] = pool[pick];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return p;
}

EmpiricalUnigram EmpiricalUnigram::from_rows(const Matrix& x) {
  const std::size_t n = x.rows();
  std::map<std::string, std::size_t> counts;
  std::vector<std::string> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    keys[i].assign(reinterpret_cast<const char*>(row.data()), row.size_bytes());
    ++counts[keys[i]];
  }
  EmpiricalUnigram u;
  u.counts.resize(n);
  u.probabilities.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    u.counts[i] = counts[keys[i]];
    u.probabilities[i] = static_cast<double>(u.counts[i]) / static_cast<double>(n);
  }
  return u;
}

}  // namespace vfedssd
