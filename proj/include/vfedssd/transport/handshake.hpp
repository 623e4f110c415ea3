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

#include <cstdint>
#include <string>

#include "vfedssd/transport/channel.hpp"

namespace vfedssd {

enum class Role : std::uint8_t { Active, Passive };

/// What each side announces in its Hello. Every field must agree.
struct HandshakeInfo {
  std::uint8_t version = kProtocolVersion;
  std::uint64_t schema_hash = 0;
  std::uint64_t config_hash = 0;
  std::uint32_t d_a = 0;  // party A bottom output width
  std::uint32_t d_b = 0;  // party B bottom output width
  std::uint32_t batch_size = 0;
  std::uint32_t pretrain_batch_size = 0;

  bool operator==(const HandshakeInfo&) const = default;
};

struct Session {
  Role role = Role::Active;
  HandshakeInfo local;
  HandshakeInfo peer;
};

/// Exchanges Hello messages (the active side speaks first, the passive side
/// always answers so both sides can report both views). Throws
/// HandshakeError naming every mismatching field, with both hashes.
Session handshake(Channel& channel, Role role, const HandshakeInfo& local);

std::string hex64(std::uint64_t v);

}  // namespace vfedssd
