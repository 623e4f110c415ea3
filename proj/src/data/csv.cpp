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

#include "vfedssd/data/csv.hpp"

#include <fstream>

#include "vfedssd/common/error.hpp"

namespace vfedssd {

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw SchemaError("unknown column " + name);
}

bool CsvTable::has_column(const std::string& name) const {
  for (const auto& h : header) {
    if (h == name) return true;
  }
  return false;
}

namespace {

// Reads one record; returns false at end of input. line is advanced by the
// number of physical lines consumed.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line,
                 const std::string& source) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  const std::size_t start_line = line;
  for (;;) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) {
      if (quoted) throw DataError(source + ": unterminated quote starting on line " + std::to_string(start_line));
      fields.push_back(std::move(field));
      ++line;
      return true;
    }
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get();
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
    } else if (ch == '"') {
      if (!field.empty() || field_was_quoted) {
        throw DataError(source + ": stray quote on line " + std::to_string(line));
      }
      quoted = true;
      field_was_quoted = true;
    } else if (ch == '\r') {
      if (in.peek() == '\n') in.get();
      fields.push_back(std::move(field));
      ++line;
      return true;
    } else if (ch == '\n') {
      fields.push_back(std::move(field));
      ++line;
      return true;
    } else {
      if (field_was_quoted) throw DataError(source + ": text after closing quote on line " + std::to_string(line));
      field.push_back(ch);
    }
  }
}

}  // namespace

CsvTable read_csv(std::istream& in, const std::string& source_name) {
  CsvTable table;
  std::size_t line = 1;
  std::vector<std::string> fields;
  if (!read_record(in, fields, line, source_name)) throw DataError(source_name + ": missing header row");
  table.header = fields;
  for (;;) {
    const std::size_t start = line;
    if (!read_record(in, fields, line, source_name)) break;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != table.header.size()) {
      throw DataError(source_name + ": line " + std::to_string(start) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(fields);
    table.line_numbers.push_back(start);
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_csv(in, path.string());
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << csv_escape(row[i]);
    }
    out << '\n';
  };
  write_row(table.header);
  for (const auto& r : table.rows) write_row(r);
}

}  // namespace vfedssd
