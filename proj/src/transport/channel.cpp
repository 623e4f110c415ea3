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

#include "vfedssd/transport/channel.hpp"

#include <condition_variable>
#include <deque>
#include <sstream>

#include "vfedssd/common/error.hpp"
#include "vfedssd/common/hash.hpp"

namespace vfedssd {

std::uint64_t Channel::send(MessageType type, std::optional<Matrix> payload,
                            std::map<std::string, std::string> meta) {
  ProtocolMessage msg;
  msg.type = type;
  {
    std::lock_guard lock(mu_);
    msg.round = last_sent_round_ + 1;
  }
  msg.payload = std::move(payload);
  msg.meta = std::move(meta);
  send(msg);
  return msg.round;
}

void Channel::send(const ProtocolMessage& msg) {
  {
    std::lock_guard lock(mu_);
    if (msg.round <= last_sent_round_) {
      throw ProtocolError("outgoing round " + std::to_string(msg.round) + " does not exceed " +
                          std::to_string(last_sent_round_));
    }
  }
  const auto frame = encode_frame(msg);
  write_frame(frame);
  std::lock_guard lock(mu_);
  last_sent_round_ = msg.round;
  record(Direction::Sent, msg, frame);
}

ProtocolMessage Channel::recv(Millis timeout) {
  const auto frame = read_frame(timeout);
  ProtocolMessage msg = decode_frame(frame);
  std::lock_guard lock(mu_);
  if (msg.round <= last_received_round_) {
    throw ProtocolError("incoming round " + std::to_string(msg.round) + " does not exceed " +
                        std::to_string(last_received_round_));
  }
  last_received_round_ = msg.round;
  record(Direction::Received, msg, frame);
  return msg;
}

ProtocolMessage Channel::expect(MessageType type) {
  ProtocolMessage msg = recv();
  if (msg.type != type) {
    if (msg.type == MessageType::Control && msg.meta.count("cmd") && msg.meta.at("cmd") == "error") {
      throw ProtocolError("peer reported: " + (msg.meta.count("message") ? msg.meta.at("message") : std::string("error")));
    }
    std::string detail;
    if (msg.type == MessageType::Control && msg.meta.count("cmd")) detail = " (" + msg.meta.at("cmd") + ")";
    throw ProtocolError("expected " + std::string(message_type_name(type)) + ", received " +
                        std::string(message_type_name(msg.type)) + detail);
  }
  return msg;
}

void Channel::record(Direction d, const ProtocolMessage& msg, std::span<const std::byte> frame) {
  const auto t = static_cast<std::size_t>(msg.type);
  if (d == Direction::Sent) {
    ++stats_.messages_sent;
    stats_.bytes_sent += frame.size();
    ++stats_.sent_by_type[t];
  } else {
    ++stats_.messages_received;
    stats_.bytes_received += frame.size();
    ++stats_.received_by_type[t];
  }
  if (!transcript_enabled_) return;
  TranscriptEntry e;
  e.direction = d;
  e.type = msg.type;
  e.round = msg.round;
  e.rows = msg.payload ? static_cast<std::uint32_t>(msg.payload->rows()) : 0;
  e.cols = msg.payload ? static_cast<std::uint32_t>(msg.payload->cols()) : 0;
  e.frame_digest = Fnv1a64{}.update(frame).digest();
  e.meta = msg.meta;
  transcript_.push_back(std::move(e));
}

ChannelStats Channel::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

std::vector<TranscriptEntry> Channel::transcript() const {
  std::lock_guard lock(mu_);
  return transcript_;
}

void Channel::set_transcript_enabled(bool on) {
  std::lock_guard lock(mu_);
  transcript_enabled_ = on;
}

std::uint64_t Channel::transcript_digest() const {
  std::lock_guard lock(mu_);
  Fnv1a64 h;
  for (const auto& e : transcript_) {
    h.update_byte(static_cast<std::uint8_t>(e.direction));
    h.update_u64(e.round);
    h.update_u64(e.frame_digest);
  }
  return h.digest();
}

std::string Channel::transcript_text() const {
  std::lock_guard lock(mu_);
  std::ostringstream out;
  for (const auto& e : transcript_) {
    out << (e.direction == Direction::Sent ? "send " : "recv ") << message_type_name(e.type) << " round=" << e.round;
    if (e.rows) out << " payload=" << e.rows << "x" << e.cols;
    for (const auto& [k, v] : e.meta) out << ' ' << k << '=' << v;
    out << '\n';
  }
  return out.str();
}

namespace {

struct FrameQueue {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::vector<std::byte>> frames;
  bool closed = false;
};

class InprocChannel final : public Channel {
 public:
  InprocChannel(std::shared_ptr<FrameQueue> out, std::shared_ptr<FrameQueue> in)
      : out_(std::move(out)), in_(std::move(in)) {}
  ~InprocChannel() override { close(); }

  void close() override {
    for (auto* q : {out_.get(), in_.get()}) {
      std::lock_guard lock(q->mu);
      q->closed = true;
      q->cv.notify_all();
    }
  }

 protected:
  void write_frame(std::span<const std::byte> frame) override {
    std::lock_guard lock(out_->mu);
    if (out_->closed) throw TransportError("in-process channel closed");
    out_->frames.emplace_back(frame.begin(), frame.end());
    out_->cv.notify_one();
  }

  std::vector<std::byte> read_frame(Millis timeout) override {
    std::unique_lock lock(in_->mu);
    const bool ready = in_->cv.wait_for(lock, timeout, [&] { return !in_->frames.empty() || in_->closed; });
    if (!in_->frames.empty()) {
      auto f = std::move(in_->frames.front());
      in_->frames.pop_front();
      return f;
    }
    if (!ready) throw TimeoutError("no message within " + std::to_string(timeout.count()) + " ms");
    throw TransportError("in-process channel closed by peer");
  }

 private:
  std::shared_ptr<FrameQueue> out_;
  std::shared_ptr<FrameQueue> in_;
};

}  // namespace

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_inproc_pair() {
  auto ab = std::make_shared<FrameQueue>();
  auto ba = std::make_shared<FrameQueue>();
  return {std::make_unique<InprocChannel>(ab, ba), std::make_unique<InprocChannel>(ba, ab)};
}

}  // namespace vfedssd
