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

#include "vfedssd/data/schema.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "vfedssd/common/error.hpp"
#include "vfedssd/common/hash.hpp"

namespace vfedssd {

void FieldSpec::validate() const {
  if (name.empty()) throw SchemaError("field with empty name");
  if (kind == FieldKind::Categorical) {
    if (buckets < 2) throw SchemaError("categorical field " + name + " needs buckets >= 2");
    if (buckets > kMaxBuckets) throw SchemaError("categorical field " + name + " exceeds 2^24 buckets");
    if (embed_dim < 1) throw SchemaError("categorical field " + name + " needs embed_dim >= 1");
  }
}

std::size_t PartySchema::post_embed_dim() const {
  std::size_t d = 0;
  for (const auto& f : fields) d += f.input_width();
  return d;
}

std::size_t PartySchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].name == name) return i;
  }
  throw SchemaError("unknown field " + std::string(name));
}

bool PartySchema::has_categorical() const {
  for (const auto& f : fields) {
    if (f.kind == FieldKind::Categorical) return true;
  }
  return false;
}

void PartySchema::validate() const {
  if (fields.empty()) throw SchemaError("party " + std::string(party_name(party)) + " schema has no fields");
  std::set<std::string> seen;
  for (const auto& f : fields) {
    f.validate();
    if (!seen.insert(f.name).second) throw SchemaError("duplicate field " + f.name);
  }
}

std::string PartySchema::to_text() const {
  std::ostringstream out;
  out << "party " << party_name(party) << '\n';
  for (const auto& f : fields) {
    if (f.kind == FieldKind::Categorical) {
      out << "categorical " << f.name << " buckets=" << f.buckets << " dim=" << f.embed_dim << '\n';
    } else {
      out << "numerical " << f.name << '\n';
    }
  }
  return out.str();
}

namespace {

std::size_t parse_count(const std::string& token, std::string_view key, std::size_t line) {
  const std::string prefix = std::string(key) + "=";
  if (token.rfind(prefix, 0) != 0) {
    throw SchemaError("line " + std::to_string(line) + ": expected " + prefix + "<n>, got " + token);
  }
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(token.substr(prefix.size()), &pos);
    if (pos != token.size() - prefix.size()) throw std::invalid_argument(token);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw SchemaError("line " + std::to_string(line) + ": bad count in " + token);
  }
}

}  // namespace

PartySchema PartySchema::parse(std::string_view text) {
  PartySchema schema;
  bool have_party = false;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string kind;
    if (!(tokens >> kind)) continue;
    if (kind == "party") {
      std::string p;
      tokens >> p;
      if (p == "A") {
        schema.party = Party::A;
      } else if (p == "B") {
        schema.party = Party::B;
      } else {
        throw SchemaError("line " + std::to_string(line_no) + ": party must be A or B");
      }
      have_party = true;
    } else if (kind == "numerical") {
      std::string name;
      if (!(tokens >> name)) throw SchemaError("line " + std::to_string(line_no) + ": missing field name");
      schema.fields.push_back(FieldSpec::numerical(name));
    } else if (kind == "categorical") {
      std::string name, buckets, dim;
      if (!(tokens >> name >> buckets >> dim)) {
        throw SchemaError("line " + std::to_string(line_no) + ": categorical needs name buckets=N dim=D");
      }
      schema.fields.push_back(FieldSpec::categorical(name, parse_count(buckets, "buckets", line_no),
                                                     parse_count(dim, "dim", line_no)));
    } else {
      throw SchemaError("line " + std::to_string(line_no) + ": unknown directive " + kind);
    }
  }
  if (!have_party) throw SchemaError("schema lacks a 'party' line");
  schema.validate();
  return schema;
}

PartySchema PartySchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

void PartySchema::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write schema file " + path.string());
  out << to_text();
}

std::uint64_t PartySchema::hash() const { return fnv1a64(to_text()); }

}  // namespace vfedssd
