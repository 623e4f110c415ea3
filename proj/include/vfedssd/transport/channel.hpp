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

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vfedssd/transport/message.hpp"

namespace vfedssd {

using Millis = std::chrono::milliseconds;

inline constexpr Millis kDefaultRecvTimeout{30000};

enum class Direction : std::uint8_t { Sent, Received };

/// What a channel logs per frame. Wall-clock data is deliberately absent so
/// transcripts of the same run compare equal across transports.
struct TranscriptEntry {
  Direction direction = Direction::Sent;
  MessageType type = MessageType::Control;
  std::uint64_t round = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::uint64_t frame_digest = 0;
  std::map<std::string, std::string> meta;

  bool operator==(const TranscriptEntry&) const = default;
};

struct ChannelStats {
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_received = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  std::array<std::uint64_t, 7> sent_by_type{};
  std::array<std::uint64_t, 7> received_by_type{};

  std::uint64_t sent(MessageType t) const { return sent_by_type[static_cast<std::size_t>(t)]; }
  std::uint64_t received(MessageType t) const { return received_by_type[static_cast<std::size_t>(t)]; }
  std::uint64_t messages() const { return messages_sent + messages_received; }
  std::uint64_t bytes() const { return bytes_sent + bytes_received; }
};

/// Ordered, typed message channel to the peer party. Round numbers are
/// checked to increase strictly in each direction. send and recv may run on
/// different threads, but neither concurrently with itself.
class Channel {
 public:
  virtual ~Channel() = default;

  /// Sends with the next outgoing round number, which is returned.
  std::uint64_t send(MessageType type, std::optional<Matrix> payload = std::nullopt,
                     std::map<std::string, std::string> meta = {});
  /// Sends msg as is; its round must exceed the last one sent.
  void send(const ProtocolMessage& msg);
  /// Writes pre-encoded bytes without any bookkeeping.
  void send_raw(std::span<const std::byte> frame) { write_frame(frame); }

  ProtocolMessage recv() { return recv(timeout_); }
  ProtocolMessage recv(Millis timeout);
  /// recv() that throws ProtocolError unless the message has the given type.
  ProtocolMessage expect(MessageType type);

  virtual void close() = 0;

  void set_timeout(Millis timeout) { timeout_ = timeout; }
  Millis timeout() const { return timeout_; }

  ChannelStats stats() const;
  std::vector<TranscriptEntry> transcript() const;
  void set_transcript_enabled(bool on);
  /// Digest over every transcript entry, in order.
  std::uint64_t transcript_digest() const;
  /// One human-readable line per transcript entry.
  std::string transcript_text() const;

 protected:
  virtual void write_frame(std::span<const std::byte> frame) = 0;
  /// Returns one whole frame. Throws TimeoutError if none starts within
  /// timeout and TransportError if the peer is gone.
  virtual std::vector<std::byte> read_frame(Millis timeout) = 0;

 private:
  void record(Direction d, const ProtocolMessage& msg, std::span<const std::byte> frame);

  Millis timeout_ = kDefaultRecvTimeout;
  mutable std::mutex mu_;
  std::uint64_t last_sent_round_ = 0;
  std::uint64_t last_received_round_ = 0;
  ChannelStats stats_;
  bool transcript_enabled_ = true;
  std::vector<TranscriptEntry> transcript_;
};

/// Two connected in-process endpoints; frames travel as encoded bytes
/// through unbounded queues, so send never blocks.
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_inproc_pair();

/// Listening TCP socket. Port 0 picks an ephemeral port.
class TcpListener {
 public:
  TcpListener(const std::string& host, std::uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  /// Waits for one connection; throws TimeoutError after timeout.
  std::unique_ptr<Channel> accept(Millis timeout);

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Connects to host:port, retrying refused connections until timeout.
std::unique_ptr<Channel> tcp_connect(const std::string& host, std::uint16_t port, Millis timeout);

}  // namespace vfedssd
