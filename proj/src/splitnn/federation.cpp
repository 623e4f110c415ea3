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

#include "vfedssd/splitnn/federation.hpp"

#include "vfedssd/common/error.hpp"

namespace vfedssd {

InprocFederation::InprocFederation(ActiveData active_data, PassiveData passive_data, FederatedArch arch,
                                   std::filesystem::path artifact_dir, std::optional<HandshakeInfo> passive_hello) {
  auto [a, b] = make_inproc_pair();
  channel_a_ = std::move(a);
  channel_b_ = std::move(b);
  const std::size_t d_b = bottom_out_dim(passive_data.features.schema, arch.bottom_b);
  passive_ = std::make_unique<PassiveParty>(std::move(passive_data), arch.bottom_b, *channel_b_, std::move(artifact_dir));
  active_ = std::make_unique<ActiveParty>(std::move(active_data), std::move(arch), d_b, *channel_a_);
  thread_ = std::thread([this, passive_hello] {
    try {
      if (passive_hello) handshake(*channel_b_, Role::Passive, *passive_hello);
      passive_->serve();
    } catch (...) {
      passive_error_ = std::current_exception();
      channel_b_->close();
    }
  });
}

InprocFederation::~InprocFederation() {
  if (!finished_) {
    try {
      active_->bye();
    } catch (...) {
    }
    channel_a_->close();
  }
  if (thread_.joinable()) thread_.join();
}

void InprocFederation::finish() {
  if (finished_) return;
  finished_ = true;
  try {
    active_->bye();
  } catch (const TransportError&) {
  }
  thread_.join();
  if (passive_error_) std::rethrow_exception(passive_error_);
}

PassiveParty& InprocFederation::passive() {
  if (!finished_) throw StateError("passive party state is only readable after finish()");
  return *passive_;
}

}  // namespace vfedssd
