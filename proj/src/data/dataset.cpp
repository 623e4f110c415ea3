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

#include "vfedssd/data/dataset.hpp"

#include <numeric>

#include "vfedssd/common/error.hpp"
#include "vfedssd/common/rng.hpp"

namespace vfedssd {

namespace {

void check_aligned(const Matrix& a, const Matrix& b, std::string_view segment) {
  if (a.rows() != b.rows()) {
    throw AlignmentError(std::string(segment) + " segment: party A has " + std::to_string(a.rows()) +
                         " rows, party B has " + std::to_string(b.rows()));
  }
}

void check_labels(std::span<const float> y, std::size_t rows, std::string_view segment) {
  if (y.size() != rows) {
    throw DataError(std::string(segment) + " segment has " + std::to_string(rows) + " rows but " +
                    std::to_string(y.size()) + " labels");
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0f && y[i] != 1.0f) {
      throw DataError(std::string(segment) + " label at row " + std::to_string(i) + " is not 0/1");
    }
  }
}

void check_width(const Matrix& m, const PartySchema& schema, std::string_view what) {
  if (m.rows() > 0 && m.cols() != schema.width()) {
    throw SchemaError(std::string(what) + " has " + std::to_string(m.cols()) + " columns, schema has " +
                      std::to_string(schema.width()));
  }
}

}  // namespace

void PartitionedDataset::validate() const {
  check_aligned(labeled.x_a, labeled.x_b, "labeled");
  check_aligned(unlabeled.x_a, unlabeled.x_b, "unlabeled");
  check_aligned(test.x_a, test.x_b, "test");
  check_labels(labeled.y, labeled.size(), "labeled");
  check_labels(test.y, test.size(), "test");
  for (const Matrix* m : {&labeled.x_a, &unlabeled.x_a, &test.x_a}) check_width(*m, schema_a, "party A features");
  for (const Matrix* m : {&labeled.x_b, &unlabeled.x_b, &test.x_b}) check_width(*m, schema_b, "party B features");
}

PartitionedDataset combine_parties(PartyTable a, PartyTable b) {
  if (a.schema.party != Party::A || b.schema.party != Party::B) {
    throw SchemaError("combine_parties expects an A table and a B table");
  }
  if (!b.labeled_y.empty() || !b.test_y.empty()) throw DataError("passive party table must not carry labels");
  PartitionedDataset ds;
  ds.schema_a = std::move(a.schema);
  ds.schema_b = std::move(b.schema);
  ds.labeled = {std::move(a.labeled), std::move(b.labeled), std::move(a.labeled_y)};
  ds.unlabeled = {std::move(a.unlabeled), std::move(b.unlabeled)};
  ds.test = {std::move(a.test), std::move(b.test), std::move(a.test_y)};
  ds.validate();
  return ds;
}

PartyTable party_table(const PartitionedDataset& ds, Party party) {
  PartyTable t;
  if (party == Party::A) {
    t.schema = ds.schema_a;
    t.labeled = ds.labeled.x_a;
    t.unlabeled = ds.unlabeled.x_a;
    t.test = ds.test.x_a;
    t.labeled_y = ds.labeled.y;
    t.test_y = ds.test.y;
  } else {
    t.schema = ds.schema_b;
    t.labeled = ds.labeled.x_b;
    t.unlabeled = ds.unlabeled.x_b;
    t.test = ds.test.x_b;
  }
  return t;
}

std::string_view segment_name(Segment s) {
  switch (s) {
    case Segment::Train: return "train";
    case Segment::Validation: return "validation";
    case Segment::Unlabeled: return "unlabeled";
    case Segment::Test: return "test";
  }
  return "?";
}

Segment parse_segment(std::string_view name) {
  for (Segment s : {Segment::Train, Segment::Validation, Segment::Unlabeled, Segment::Test}) {
    if (segment_name(s) == name) return s;
  }
  throw ProtocolError("unknown segment '" + std::string(name) + "'");
}

ValidationSplit split_validation(std::size_t n_labeled, std::uint64_t seed) {
  std::vector<std::size_t> order(n_labeled);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const std::size_t n_val = n_labeled / 20;
  ValidationSplit split;
  split.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

const Matrix& PartyFeatures::segment(Segment s) const {
  switch (s) {
    case Segment::Train: return train;
    case Segment::Validation: return validation;
    case Segment::Unlabeled: return unlabeled;
    case Segment::Test: return test;
  }
  throw ProtocolError("bad segment");
}

std::span<const float> ActiveData::labels(Segment s) const {
  switch (s) {
    case Segment::Train: return train_y;
    case Segment::Validation: return validation_y;
    case Segment::Test: return test_y;
    case Segment::Unlabeled: break;
  }
  throw DataError("the unlabeled segment has no labels");
}

namespace {

PartyFeatures make_features(const PartyTable& t, const ValidationSplit& split) {
  const std::size_t n = split.train.size() + split.validation.size();
  if (n != t.labeled.rows()) {
    throw AlignmentError("validation split covers " + std::to_string(n) + " rows, labeled segment has " +
                         std::to_string(t.labeled.rows()));
  }
  PartyFeatures f;
  f.schema = t.schema;
  f.train = gather_rows(t.labeled, split.train);
  f.validation = gather_rows(t.labeled, split.validation);
  f.unlabeled = t.unlabeled;
  f.test = t.test;
  return f;
}

std::vector<float> gather(std::span<const float> y, std::span<const std::size_t> rows) {
  std::vector<float> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(y[r]);
  return out;
}

}  // namespace

ActiveData make_active_data(const PartyTable& table, const ValidationSplit& split) {
  if (table.labeled_y.size() != table.labeled.rows()) throw DataError("active party table lacks labels");
  ActiveData d;
  d.features = make_features(table, split);
  d.train_y = gather(table.labeled_y, split.train);
  d.validation_y = gather(table.labeled_y, split.validation);
  d.test_y = table.test_y;
  return d;
}

PassiveData make_passive_data(const PartyTable& table, const ValidationSplit& split) {
  return PassiveData{make_features(table, split)};
}

std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    std::optional<std::uint64_t> shuffle_seed,
                                                    std::size_t min_batch) {
  if (batch_size < 2) throw ValidationError("batch size must be at least 2");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle_seed) {
    Rng rng(*shuffle_seed);
    rng.shuffle(std::span<std::size_t>(order));
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(n, begin + batch_size);
    if (end - begin < min_batch) break;
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::vector<Batch> batches(const LabeledSegment& seg, std::size_t batch_size,
                           std::optional<std::uint64_t> shuffle_seed) {
  check_aligned(seg.x_a, seg.x_b, "labeled");
  std::vector<Batch> out;
  for (const auto& rows : batch_indices(seg.size(), batch_size, shuffle_seed)) {
    std::vector<float> y;
    y.reserve(rows.size());
    for (std::size_t r : rows) y.push_back(seg.y.at(r));
    out.push_back({gather_rows(seg.x_a, rows), gather_rows(seg.x_b, rows), std::move(y)});
  }
  return out;
}

std::vector<Batch> batches(const UnlabeledSegment& seg, std::size_t batch_size,
                           std::optional<std::uint64_t> shuffle_seed, std::size_t min_batch) {
  check_aligned(seg.x_a, seg.x_b, "unlabeled");
  std::vector<Batch> out;
  for (const auto& rows : batch_indices(seg.size(), batch_size, shuffle_seed, min_batch)) {
    out.push_back({gather_rows(seg.x_a, rows), gather_rows(seg.x_b, rows), std::nullopt});
  }
  return out;
}

}  // namespace vfedssd
