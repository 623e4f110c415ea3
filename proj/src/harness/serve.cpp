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

#include "vfedssd/harness/serve.hpp"

#include "vfedssd/common/error.hpp"
#include "vfedssd/harness/experiment.hpp"
#include "vfedssd/splitnn/party.hpp"

namespace vfedssd {

Session serve_party_b(const ExperimentConfig& config, const ServeOptions& options) {
  auto log = [&](const std::string& line) {
    if (options.log != nullptr) *options.log << line << std::endl;
  };
  const auto [schema_a, schema_b] = load_schemas(config);
  const HandshakeInfo hello = hello_for(config, schema_a, schema_b);
  const PartyTable table = load_party(config, Party::B);
  if (!table.labeled_y.empty() || !table.test_y.empty()) throw StateError("party B table holds labels");
  const auto split = validation_split(config, table.labeled.rows());

  TcpListener listener(options.host, options.port);
  log("party B listening on " + options.host + ":" + std::to_string(listener.port()));
  if (options.on_listening) options.on_listening(listener.port());
  auto channel = listener.accept(Millis(static_cast<long long>(options.accept_timeout_seconds * 1000)));
  channel->set_timeout(Millis(static_cast<long long>(config.timeout_seconds * 1000)));

  Session session;
  try {
    session = handshake(*channel, Role::Passive, hello);
  } catch (const HandshakeError& e) {
    log(std::string("handshake failed: ") + e.what());
    throw;
  }
  log("session established: config_hash=" + hex64(session.local.config_hash) +
      " peer_config_hash=" + hex64(session.peer.config_hash) + " schema_hash=" + hex64(session.local.schema_hash));

  PassiveParty party(make_passive_data(table, split), config.arch.bottom_b, *channel, run_directory(config));
  party.serve();
  channel->close();
  log("session closed after " + std::to_string(channel->stats().messages()) + " messages");
  return session;
}

}  // namespace vfedssd
