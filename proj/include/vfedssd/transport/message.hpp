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

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vfedssd/numeric/matrix.hpp"

namespace vfedssd {

inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 22;
/// Upper bounds accepted when decoding, so a corrupt header cannot trigger
/// a huge allocation.
inline constexpr std::uint64_t kMaxPayloadFloats = std::uint64_t{1} << 28;
inline constexpr std::uint32_t kMaxMetaBytes = 1u << 20;

enum class MessageType : std::uint8_t {
  Hello = 1,
  Activation = 2,
  Gradient = 3,
  EvalActivation = 4,
  Control = 5,
  Bye = 6,
};

std::string_view message_type_name(MessageType t);
bool requires_payload(MessageType t);

struct ProtocolMessage {
  MessageType type = MessageType::Control;
  std::uint64_t round = 0;
  std::optional<Matrix> payload;
  std::map<std::string, std::string> meta;

  const std::string& get(const std::string& key) const;
};

/// Wire layout, all integers little-endian:
///   "VFSD" | version u8 | type u8 | round u64 | rows u32 | cols u32 |
///   rows*cols f32 | meta_bytes u32 | meta
/// where meta is a u32 pair count followed by (u32 len, key, u32 len, value)
/// pairs in key order.
std::vector<std::byte> encode_frame(const ProtocolMessage& msg);
ProtocolMessage decode_frame(std::span<const std::byte> bytes);

/// Parsed fixed-size prefix of a frame.
struct FrameHeader {
  std::uint8_t version = 0;
  MessageType type = MessageType::Control;
  std::uint64_t round = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;

  /// Matrix payload bytes that follow the header.
  std::size_t payload_bytes() const { return static_cast<std::size_t>(rows) * cols * 4; }
};

/// Validates magic, version, type and dimensions.
FrameHeader decode_header(std::span<const std::byte> header);

}  // namespace vfedssd
