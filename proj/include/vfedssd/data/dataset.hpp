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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vfedssd/data/schema.hpp"
#include "vfedssd/numeric/matrix.hpp"

namespace vfedssd {

/// Aligned rows with labels. x_a.row(i), x_b.row(i) and y[i] describe the
/// same sample.
struct LabeledSegment {
  Matrix x_a;
  Matrix x_b;
  std::vector<float> y;

  std::size_t size() const { return x_a.rows(); }
};

struct UnlabeledSegment {
  Matrix x_a;
  Matrix x_b;

  std::size_t size() const { return x_a.rows(); }
};

/// Both parties' encoded features, aligned by row index within each segment.
/// Only used where one process legitimately holds both halves (simulation,
/// tests); party runtimes receive the per-party views below.
struct PartitionedDataset {
  PartySchema schema_a;
  PartySchema schema_b;
  LabeledSegment labeled;
  UnlabeledSegment unlabeled;
  LabeledSegment test;

  /// Throws AlignmentError / DataError when row counts or labels are
  /// inconsistent.
  void validate() const;
};

/// One party's encoded features for every segment. labeled_y / test_y are
/// filled for the active party only.
struct PartyTable {
  PartySchema schema;
  Matrix labeled;
  Matrix unlabeled;
  Matrix test;
  std::vector<float> labeled_y;
  std::vector<float> test_y;
};

PartitionedDataset combine_parties(PartyTable a, PartyTable b);
PartyTable party_table(const PartitionedDataset& ds, Party party);

enum class Segment : std::uint8_t { Train, Validation, Unlabeled, Test };

std::string_view segment_name(Segment s);
Segment parse_segment(std::string_view name);

/// Disjoint train / validation row indices of the labeled segment. The
/// validation part holds exactly floor(n / 20) rows.
struct ValidationSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

ValidationSplit split_validation(std::size_t n_labeled, std::uint64_t seed);

/// Features of one party after the validation split.
struct PartyFeatures {
  PartySchema schema;
  Matrix train;
  Matrix validation;
  Matrix unlabeled;
  Matrix test;

  const Matrix& segment(Segment s) const;
  std::size_t rows(Segment s) const { return segment(s).rows(); }
};

/// What the label-holding party sees.
struct ActiveData {
  PartyFeatures features;
  std::vector<float> train_y;
  std::vector<float> validation_y;
  std::vector<float> test_y;

  /// Labels of a labeled segment; throws DataError for Unlabeled.
  std::span<const float> labels(Segment s) const;
};

/// What the feature-only party sees: there is no label field to read.
struct PassiveData {
  PartyFeatures features;
};

ActiveData make_active_data(const PartyTable& table, const ValidationSplit& split);
PassiveData make_passive_data(const PartyTable& table, const ValidationSplit& split);

struct Batch {
  Matrix x_a;
  Matrix x_b;
  std::optional<std::vector<float>> y;

  std::size_t rows() const { return x_a.rows(); }
};

/// Row-index batches over n rows. With a seed the order is a deterministic
/// shuffle. A trailing batch smaller than min_batch is dropped. Throws
/// ValidationError for batch_size < 2.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    std::optional<std::uint64_t> shuffle_seed,
                                                    std::size_t min_batch = 1);

std::vector<Batch> batches(const LabeledSegment& seg, std::size_t batch_size,
                           std::optional<std::uint64_t> shuffle_seed);
std::vector<Batch> batches(const UnlabeledSegment& seg, std::size_t batch_size,
                           std::optional<std::uint64_t> shuffle_seed, std::size_t min_batch = 1);

}  // namespace vfedssd
