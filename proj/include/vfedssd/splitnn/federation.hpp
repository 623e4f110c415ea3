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

#include <exception>
#include <filesystem>
#include <memory>
#include <optional>
#include <thread>

#include "vfedssd/splitnn/party.hpp"
#include "vfedssd/transport/handshake.hpp"

namespace vfedssd {

/// Both parties in one process: the passive party serves on its own thread
/// and the two sides share nothing but an in-process channel pair.
class InprocFederation {
 public:
  /// With passive_hello the passive thread answers a handshake before
  /// serving; the caller then runs the active side of it.
  InprocFederation(ActiveData active_data, PassiveData passive_data, FederatedArch arch,
                   std::filesystem::path artifact_dir = {}, std::optional<HandshakeInfo> passive_hello = {});
  ~InprocFederation();
  InprocFederation(const InprocFederation&) = delete;
  InprocFederation& operator=(const InprocFederation&) = delete;

  ActiveParty& active() { return *active_; }
  Channel& active_channel() { return *channel_a_; }
  /// Sends Bye, waits for the passive thread and rethrows its failure.
  void finish();
  /// The passive party's state; only available after finish().
  PassiveParty& passive();

 private:
  std::unique_ptr<Channel> channel_a_;
  std::unique_ptr<Channel> channel_b_;
  std::unique_ptr<PassiveParty> passive_;
  std::unique_ptr<ActiveParty> active_;
  std::thread thread_;
  std::exception_ptr passive_error_;
  bool finished_ = false;
};

}  // namespace vfedssd
