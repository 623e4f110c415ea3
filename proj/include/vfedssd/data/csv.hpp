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
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace vfedssd {

/// A parsed CSV file. line_numbers[i] is the 1-based physical line on which
/// data row i starts (the header is line 1).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

/// RFC-4180 reader: comma separated, optional double-quoted fields with ""
/// escapes and embedded newlines, CRLF or LF line ends. The header row is
/// required and every row must have the header's field count.
CsvTable read_csv(std::istream& in, const std::string& source_name = "<stream>");
CsvTable read_csv(const std::filesystem::path& path);

/// Writes fields, quoting only where needed.
void write_csv(const std::filesystem::path& path, const CsvTable& table);
std::string csv_escape(const std::string& field);

}  // namespace vfedssd
