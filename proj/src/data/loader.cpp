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

#include "vfedssd/data/loader.hpp"

#include <sstream>

#include "vfedssd/common/error.hpp"
#include "vfedssd/data/csv.hpp"
#include "vfedssd/data/encoder.hpp"

namespace vfedssd {

namespace {

struct RawSegment {
  std::vector<std::vector<std::string>> rows;  // schema field order
  std::vector<float> labels;
  bool present = false;
};

RawSegment read_segment(const std::filesystem::path& path, const PartySchema& schema,
                        const std::string& label_column) {
  RawSegment seg;
  if (path.empty()) return seg;
  seg.present = true;
  const CsvTable table = read_csv(path);
  std::vector<std::size_t> columns;
  for (const auto& f : schema.fields) {
    if (!table.has_column(f.name)) throw SchemaError(path.string() + ": unknown column " + f.name);
    columns.push_back(table.column(f.name));
  }
  std::optional<std::size_t> label_col;
  if (!label_column.empty()) {
    if (!table.has_column(label_column)) throw SchemaError(path.string() + ": missing label column " + label_column);
    label_col = table.column(label_column);
  }
  std::vector<std::size_t> bad_lines;
  seg.rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    std::vector<std::string> values;
    values.reserve(columns.size());
    for (std::size_t c : columns) values.push_back(row[c]);
    seg.rows.push_back(std::move(values));
    if (label_col) {
      double y;
      if (!parse_number(row[*label_col], y) || (y != 0.0 && y != 1.0)) {
        bad_lines.push_back(table.line_numbers[r]);
      } else {
        seg.labels.push_back(static_cast<float>(y));
      }
    }
  }
  if (!bad_lines.empty()) {
    std::ostringstream msg;
    msg << path.string() << ": unparseable labels on lines";
    for (std::size_t i = 0; i < bad_lines.size() && i < 20; ++i) msg << (i ? ", " : " ") << bad_lines[i];
    if (bad_lines.size() > 20) msg << " (+" << bad_lines.size() - 20 << " more)";
    throw DataError(msg.str());
  }
  return seg;
}

Matrix encode_rows(const FeatureEncoder& enc, const std::vector<std::vector<std::string>>& rows,
                   const std::filesystem::path& path) {
  Matrix out(rows.size(), enc.schema().width());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    try {
      const auto v = enc.encode(rows[r]);
      std::copy(v.begin(), v.end(), out.row(r).begin());
    } catch (const DataError& e) {
      throw DataError(path.string() + ": data row " + std::to_string(r + 1) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

PartyTable load_party_csv(const PartySchema& schema, const CsvPartyPaths& paths, const std::string& label_column) {
  schema.validate();
  if (paths.labeled.empty()) throw DataError("party " + std::string(party_name(schema.party)) + ": no labeled file");
  const bool active = schema.party == Party::A;
  if (active && label_column.empty()) throw SchemaError("active party needs a label column");
  const std::string label = active ? label_column : std::string{};

  RawSegment labeled = read_segment(paths.labeled, schema, label);
  RawSegment unlabeled = read_segment(paths.unlabeled, schema, "");
  RawSegment test = read_segment(paths.test, schema, label);

  FeatureEncoder enc(schema);
  std::vector<std::vector<std::string>> fit_rows = labeled.rows;
  fit_rows.insert(fit_rows.end(), unlabeled.rows.begin(), unlabeled.rows.end());
  enc.fit(fit_rows);

  PartyTable t;
  t.schema = schema;
  t.labeled = encode_rows(enc, labeled.rows, paths.labeled);
  t.unlabeled = unlabeled.present ? encode_rows(enc, unlabeled.rows, paths.unlabeled) : Matrix(0, schema.width());
  t.test = test.present ? encode_rows(enc, test.rows, paths.test) : Matrix(0, schema.width());
  t.labeled_y = std::move(labeled.labels);
  t.test_y = std::move(test.labels);
  return t;
}

PartitionedDataset load_csv(const CsvPartyPaths& paths_a, const CsvPartyPaths& paths_b,
                            const PartySchema& schema_a, const PartySchema& schema_b,
                            const std::string& label_column) {
  PartyTable a = load_party_csv(schema_a, paths_a, label_column);
  PartyTable b = load_party_csv(schema_b, paths_b, "");
  return combine_parties(std::move(a), std::move(b));
}

}  // namespace vfedssd
