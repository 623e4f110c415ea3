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
#include <functional>
#include <ostream>
#include <string>

#include "vfedssd/harness/config.hpp"
#include "vfedssd/transport/handshake.hpp"

namespace vfedssd {

struct ServeOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  /// How long to wait for party A to connect.
  double accept_timeout_seconds = 300.0;
  /// Called once the socket listens, with the bound port.
  std::function<void(std::uint16_t)> on_listening;
  std::ostream* log = nullptr;
};

/// Party B of a two-process run: loads its own features, accepts one
/// active-party session, answers the handshake and serves commands until
/// Bye. Throws HandshakeError on a configuration mismatch and
/// TransportError if the connection breaks.
Session serve_party_b(const ExperimentConfig& config, const ServeOptions& options);

}  // namespace vfedssd
