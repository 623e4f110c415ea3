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

#include "vfedssd/transport/handshake.hpp"

#include <cstdio>

#include "vfedssd/common/error.hpp"

namespace vfedssd {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

std::map<std::string, std::string> to_meta(const HandshakeInfo& h) {
  return {
      {"version", std::to_string(h.version)},
      {"schema_hash", hex64(h.schema_hash)},
      {"config_hash", hex64(h.config_hash)},
      {"d_a", std::to_string(h.d_a)},
      {"d_b", std::to_string(h.d_b)},
      {"batch_size", std::to_string(h.batch_size)},
      {"pretrain_batch_size", std::to_string(h.pretrain_batch_size)},
  };
}

std::uint64_t parse_u64(const ProtocolMessage& m, const std::string& key, int base) {
  const std::string& s = m.get(key);
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used, base);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw HandshakeError("malformed Hello field " + key + "='" + s + "'");
  }
}

HandshakeInfo from_meta(const ProtocolMessage& m) {
  HandshakeInfo h;
  h.version = static_cast<std::uint8_t>(parse_u64(m, "version", 10));
  h.schema_hash = parse_u64(m, "schema_hash", 16);
  h.config_hash = parse_u64(m, "config_hash", 16);
  h.d_a = static_cast<std::uint32_t>(parse_u64(m, "d_a", 10));
  h.d_b = static_cast<std::uint32_t>(parse_u64(m, "d_b", 10));
  h.batch_size = static_cast<std::uint32_t>(parse_u64(m, "batch_size", 10));
  h.pretrain_batch_size = static_cast<std::uint32_t>(parse_u64(m, "pretrain_batch_size", 10));
  return h;
}

void check(const HandshakeInfo& local, const HandshakeInfo& peer) {
  if (local == peer) return;
  std::string diff;
  auto field = [&](const char* name, auto a, auto b) {
    if (a != b) {
      diff += std::string(diff.empty() ? "" : ", ") + name + " (local " + std::to_string(a) + ", peer " +
              std::to_string(b) + ")";
    }
  };
  field("version", local.version, peer.version);
  field("schema_hash", local.schema_hash, peer.schema_hash);
  field("config_hash", local.config_hash, peer.config_hash);
  field("d_a", local.d_a, peer.d_a);
  field("d_b", local.d_b, peer.d_b);
  field("batch_size", local.batch_size, peer.batch_size);
  field("pretrain_batch_size", local.pretrain_batch_size, peer.pretrain_batch_size);
  throw HandshakeError("handshake mismatch in " + diff + "; local schema_hash=" + hex64(local.schema_hash) +
                       " config_hash=" + hex64(local.config_hash) + ", peer schema_hash=" +
                       hex64(peer.schema_hash) + " config_hash=" + hex64(peer.config_hash));
}

}  // namespace

Session handshake(Channel& channel, Role role, const HandshakeInfo& local) {
  Session s;
  s.role = role;
  s.local = local;
  if (role == Role::Active) {
    channel.send(MessageType::Hello, std::nullopt, to_meta(local));
    s.peer = from_meta(channel.expect(MessageType::Hello));
  } else {
    s.peer = from_meta(channel.expect(MessageType::Hello));
    channel.send(MessageType::Hello, std::nullopt, to_meta(local));
  }
  check(local, s.peer);
  return s;
}

}  // namespace vfedssd
