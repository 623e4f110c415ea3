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

#include "vfedssd/transport/message.hpp"

#include <bit>
#include <cstring>

#include "vfedssd/common/error.hpp"

namespace vfedssd {

static_assert(std::endian::native == std::endian::little, "frame codec assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'V', 'F', 'S', 'D'};

template <class T>
void put(std::vector<std::byte>& out, T v) {
  const auto* p = reinterpret_cast<const std::byte*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

void put_string(std::vector<std::byte>& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  const auto* p = reinterpret_cast<const std::byte*>(s.data());
  out.insert(out.end(), p, p + s.size());
}

class Reader {
 public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  void read_floats(std::span<float> out) {
    need(out.size_bytes());
    std::memcpy(out.data(), bytes_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ProtocolError("truncated frame");
  }

  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view message_type_name(MessageType t) {
  switch (t) {
    case MessageType::Hello: return "Hello";
    case MessageType::Activation: return "Activation";
    case MessageType::Gradient: return "Gradient";
    case MessageType::EvalActivation: return "EvalActivation";
    case MessageType::Control: return "Control";
    case MessageType::Bye: return "Bye";
  }
  return "Unknown";
}

bool requires_payload(MessageType t) {
  return t == MessageType::Activation || t == MessageType::Gradient || t == MessageType::EvalActivation;
}

const std::string& ProtocolMessage::get(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) {
    throw ProtocolError(std::string(message_type_name(type)) + " message lacks meta key '" + key + "'");
  }
  return it->second;
}

std::vector<std::byte> encode_frame(const ProtocolMessage& msg) {
  if (requires_payload(msg.type) && !msg.payload) {
    throw ProtocolError(std::string(message_type_name(msg.type)) + " message without payload");
  }
  const std::uint32_t rows = msg.payload ? static_cast<std::uint32_t>(msg.payload->rows()) : 0;
  const std::uint32_t cols = msg.payload ? static_cast<std::uint32_t>(msg.payload->cols()) : 0;
  std::vector<std::byte> out;
  out.reserve(kFrameHeaderSize + std::size_t{rows} * cols * 4 + 8);
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put<std::uint8_t>(out, kProtocolVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(msg.type));
  put<std::uint64_t>(out, msg.round);
  put<std::uint32_t>(out, rows);
  put<std::uint32_t>(out, cols);
  if (msg.payload) {
    const auto v = msg.payload->values();
    const auto* p = reinterpret_cast<const std::byte*>(v.data());
    out.insert(out.end(), p, p + v.size_bytes());
  }
  std::vector<std::byte> meta;
  put<std::uint32_t>(meta, static_cast<std::uint32_t>(msg.meta.size()));
  for (const auto& [k, v] : msg.meta) {
    put_string(meta, k);
    put_string(meta, v);
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
  out.insert(out.end(), meta.begin(), meta.end());
  return out;
}

FrameHeader decode_header(std::span<const std::byte> header) {
  if (header.size() < kFrameHeaderSize) throw ProtocolError("truncated frame header");
  if (std::memcmp(header.data(), kMagic, 4) != 0) throw ProtocolError("bad frame magic");
  Reader r(header.subspan(4, kFrameHeaderSize - 4));
  FrameHeader h;
  h.version = r.get<std::uint8_t>();
  if (h.version != kProtocolVersion) {
    throw ProtocolError("unsupported protocol version " + std::to_string(h.version));
  }
  const auto type = r.get<std::uint8_t>();
  if (type < 1 || type > 6) throw ProtocolError("unknown message type " + std::to_string(type));
  h.type = static_cast<MessageType>(type);
  h.round = r.get<std::uint64_t>();
  h.rows = r.get<std::uint32_t>();
  h.cols = r.get<std::uint32_t>();
  if (static_cast<std::uint64_t>(h.rows) * h.cols > kMaxPayloadFloats) throw ProtocolError("frame payload too large");
  if ((h.rows == 0) != (h.cols == 0)) throw ProtocolError("frame has a degenerate payload shape");
  if (requires_payload(h.type) && h.rows == 0) {
    throw ProtocolError(std::string(message_type_name(h.type)) + " frame without payload");
  }
  return h;
}

ProtocolMessage decode_frame(std::span<const std::byte> bytes) {
  const FrameHeader h = decode_header(bytes);
  Reader r(bytes.subspan(kFrameHeaderSize));
  ProtocolMessage msg;
  msg.type = h.type;
  msg.round = h.round;
  if (h.rows > 0) {
    Matrix m(h.rows, h.cols);
    r.read_floats(m.values());
    msg.payload = std::move(m);
  }
  const auto meta_bytes = r.get<std::uint32_t>();
  if (meta_bytes > kMaxMetaBytes) throw ProtocolError("frame meta too large");
  if (r.remaining() != meta_bytes) throw ProtocolError("frame length does not match its meta size");
  const auto pairs = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < pairs; ++i) {
    std::string k = r.get_string();
    std::string v = r.get_string();
    msg.meta.emplace(std::move(k), std::move(v));
  }
  if (r.remaining() != 0) throw ProtocolError("trailing bytes after frame meta");
  return msg;
}

}  // namespace vfedssd
