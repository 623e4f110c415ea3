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

#include <filesystem>
#include <string>

#include "vfedssd/data/dataset.hpp"
#include "vfedssd/data/schema.hpp"

namespace vfedssd {

/// CSV files of one party. unlabeled and test may be empty paths, in which
/// case the segment is empty.
struct CsvPartyPaths {
  std::filesystem::path labeled;
  std::filesystem::path unlabeled;
  std::filesystem::path test;
};

/// Loads and encodes one party's files. For the active party label_column
/// names the 0/1 label column of the labeled and test files; the passive
/// party passes an empty string. Numerical statistics are fitted on the
/// labeled and unlabeled rows.
PartyTable load_party_csv(const PartySchema& schema, const CsvPartyPaths& paths, const std::string& label_column);

/// Loads both parties and checks row alignment per segment.
PartitionedDataset load_csv(const CsvPartyPaths& paths_a, const CsvPartyPaths& paths_b,
                            const PartySchema& schema_a, const PartySchema& schema_b,
                            const std::string& label_column);

}  // namespace vfedssd
