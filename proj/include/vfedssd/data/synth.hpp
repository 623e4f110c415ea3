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

#include "vfedssd/data/dataset.hpp"

namespace vfedssd {

/// How the label depends on the two parties' latent views.
enum class LabelRule {
  AOnly,     // party A's view alone
  BOnly,     // party B's view alone
  Xor,       // sign disagreement between the two views
  Additive,  // sum of both views
};

std::string_view label_rule_name(LabelRule r);
LabelRule parse_label_rule(std::string_view name);

/// Generative description of a vertically partitioned dataset.
///
/// Each sample draws a shared latent s and private latents a, b (all
/// standard normal, latent_dim each). Party A observes
/// z_A = sqrt(shared) * s + sqrt(1 - shared) * a, party B likewise with b.
/// Numerical features are noisy random projections of the party's z;
/// categorical features are quantized projections hashed into buckets.
/// The label thresholds a rule score on u_A = z_A[0], u_B = z_B[0] (plus
/// Gaussian label noise) at the quantile that yields positive_rate.
struct SyntheticSpec {
  std::size_t numerical_a = 8;
  std::size_t numerical_b = 8;
  std::size_t categorical_a = 0;
  std::size_t categorical_b = 0;
  std::size_t cardinality = 16;  // distinct raw values per categorical field
  std::size_t buckets = 64;
  std::size_t embed_dim = 4;
  std::size_t latent_dim = 4;
  double shared = 0.0;
  double feature_noise = 0.5;
  double label_noise = 0.0;
  LabelRule rule = LabelRule::Xor;
  std::size_t n_labeled = 10000;
  std::size_t n_unlabeled = 50000;
  std::size_t n_test = 10000;
  double positive_rate = 0.5;

  void validate() const;
  std::string to_text() const;
};

PartitionedDataset synth_federated(const SyntheticSpec& spec, std::uint64_t seed);

/// Writes the same samples as raw CSV plus schema files into dir:
/// {a,b}_{labeled,unlabeled,test}.csv and schema_{a,b}.txt. Party A's
/// labeled/test files carry a "label" column.
void write_synthetic_csv(const SyntheticSpec& spec, std::uint64_t seed, const std::filesystem::path& dir);

}  // namespace vfedssd
