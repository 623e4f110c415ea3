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

#include "vfedssd/splitnn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "vfedssd/common/error.hpp"
#include "vfedssd/common/hash.hpp"

namespace vfedssd {

namespace {

constexpr char kMagic[4] = {'V', 'F', 'C', 'K'};

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError(path.string() + ": truncated checkpoint");
  return v;
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

}  // namespace

const Matrix* Checkpoint::find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t.value;
  }
  return nullptr;
}

bool Checkpoint::has_prefix(std::string_view prefix) const {
  for (const auto& t : tensors) {
    if (starts_with(t.name, prefix)) return true;
  }
  return false;
}

std::uint64_t Checkpoint::digest() const {
  Fnv1a64 h;
  h.update_u64(schema_hash).update_u64(tag_hash);
  for (const auto& t : tensors) {
    h.update(t.name).update_u64(t.value.rows()).update_u64(t.value.cols());
    h.update(std::as_bytes(t.value.values()));
  }
  return h.digest();
}

Checkpoint capture(std::span<const ParamRef<float>> params, std::uint64_t schema_hash, std::uint64_t tag_hash) {
  Checkpoint c;
  c.schema_hash = schema_hash;
  c.tag_hash = tag_hash;
  for (const auto& p : params) c.tensors.push_back({p.name, *p.value});
  return c;
}

void apply_checkpoint(const Checkpoint& ckpt, std::span<const ParamRef<float>> params, std::string_view prefix) {
  for (const auto& p : params) {
    if (!starts_with(p.name, prefix)) continue;
    const Matrix* m = ckpt.find(p.name);
    if (m == nullptr) throw StateError("checkpoint has no tensor " + p.name);
    if (!m->same_shape(*p.value)) {
      throw DimensionError("checkpoint tensor " + p.name + " is " + shape_string(*m) + ", parameter is " +
                           shape_string(*p.value));
    }
    *p.value = *m;
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Written beside the target and renamed, so a reader never sees a torn file.
  auto tmp = path;
  tmp += ".tmp";
  std::ofstream out(tmp, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, ckpt.schema_hash);
  put<std::uint64_t>(out, ckpt.tag_hash);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.value.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.value.cols()));
    out.write(reinterpret_cast<const char*>(t.value.values().data()),
              static_cast<std::streamsize>(t.value.values().size_bytes()));
  }
  out.close();
  if (!out) throw DataError("failed writing " + path.string());
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw DataError(path.string() + ": not a checkpoint");
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.schema_hash = get<std::uint64_t>(in, path);
  c.tag_hash = get<std::uint64_t>(in, path);
  const auto count = get<std::uint32_t>(in, path);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get<std::uint32_t>(in, path);
    if (len > 4096) throw DataError(path.string() + ": implausible tensor name length");
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto rows = get<std::uint32_t>(in, path);
    const auto cols = get<std::uint32_t>(in, path);
    if (static_cast<std::uint64_t>(rows) * cols > (std::uint64_t{1} << 32)) {
      throw DataError(path.string() + ": implausible tensor shape");
    }
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.values().data()), static_cast<std::streamsize>(m.values().size_bytes()));
    if (!in) throw DataError(path.string() + ": truncated checkpoint");
    c.tensors.push_back({std::move(name), std::move(m)});
  }
  return c;
}

std::uint64_t params_digest(std::span<const ParamRef<float>> params) {
  Fnv1a64 h;
  for (const auto& p : params) {
    h.update(p.name);
    h.update(std::as_bytes(p.value->values()));
  }
  return h.digest();
}

std::vector<Matrix> snapshot_values(std::span<const ParamRef<float>> params) {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(*p.value);
  return out;
}

void restore_values(std::span<const ParamRef<float>> params, const std::vector<Matrix>& values) {
  if (values.size() != params.size()) throw StateError("snapshot does not match the parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!values[i].same_shape(*params[i].value)) throw DimensionError("snapshot shape mismatch for " + params[i].name);
    *params[i].value = values[i];
  }
}

}  // namespace vfedssd
