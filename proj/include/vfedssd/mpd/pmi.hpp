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
#include <vector>

#include "vfedssd/data/dataset.hpp"
#include "vfedssd/splitnn/model.hpp"

namespace vfedssd {

/// A two-variable categorical distribution: party A observes a in
/// [0, values_a), party B observes b in [0, values_b), drawn jointly with
/// probability proportional to weights[a * values_b + b].
struct PmiProbeSpec {
  std::size_t values_a = 6;
  std::size_t values_b = 6;
  std::vector<double> weights;
  std::size_t rows = 60000;
  std::size_t embed_dim = 8;

  /// a and b independent, with marginals proportional to 1, 2, ..., v.
  static PmiProbeSpec independent(std::size_t values_a, std::size_t values_b);
  /// weight(a, b) = (1 + a mod 3) * exp(beta * cos(2 pi (a - b) / v)).
  static PmiProbeSpec coupled(std::size_t v, double beta);
};

/// Sampled probe rows (unlabeled segment only; each party has one
/// categorical field whose bucket index is the value itself) and their
/// exact counts.
struct PmiProbeData {
  PmiProbeSpec spec;
  PartitionedDataset dataset;
  std::vector<std::size_t> joint_counts;  // values_a x values_b
  std::vector<std::size_t> counts_a;
  std::vector<std::size_t> counts_b;

  /// log(#(a,b) N / (#a #b)); only meaningful for nonzero counts.
  double pmi(std::size_t a, std::size_t b) const;
};

PmiProbeData make_pmi_probe(const PmiProbeSpec& spec, std::uint64_t seed);

struct PmiPair {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t count = 0;
  double pmi = 0.0;
  double logit = 0.0;
};

struct PmiReport {
  std::vector<PmiPair> pairs;  // pairs with count >= min_count
  std::size_t excluded = 0;    // pairs below min_count
  double log_k = 0.0;
  /// Pearson correlation between logit and pmi - log k (NaN if undefined).
  double pearson = 0.0;
  double mean_abs_deviation = 0.0;
  double mean_logit = 0.0;
};

/// Compares g([f_A(a) | f_B(b)]) with PMI(a, b) - log k over every value
/// pair seen at least min_count times.
PmiReport pmi_probe(BottomModel<float>& f_a, BottomModel<float>& f_b, TopModel<float>& g, const PmiProbeData& data,
                    std::size_t k, std::size_t min_count = 50);

}  // namespace vfedssd
