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
#include <span>
#include <string_view>

namespace vfedssd {

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

/// Incremental FNV-1a-64. Stable across platforms; used for feature hashing,
/// schema/config fingerprints and transcript digests.
class Fnv1a64 {
 public:
  constexpr Fnv1a64() = default;

  constexpr Fnv1a64& update(std::string_view bytes) {
    for (char c : bytes) {
      state_ ^= static_cast<std::uint8_t>(c);
      state_ *= kFnvPrime;
    }
    return *this;
  }

  Fnv1a64& update(std::span<const std::byte> bytes) {
    for (std::byte b : bytes) {
      state_ ^= static_cast<std::uint8_t>(b);
      state_ *= kFnvPrime;
    }
    return *this;
  }

  constexpr Fnv1a64& update_byte(std::uint8_t b) {
    state_ ^= b;
    state_ *= kFnvPrime;
    return *this;
  }

  constexpr Fnv1a64& update_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) update_byte(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }

  constexpr std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = kFnvOffset;
};

constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  return Fnv1a64{}.update(bytes).digest();
}

/// SplitMix64 finalizer; decorrelates derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for a named sub-stream of a run, e.g. derive_seed(seed, "bottom_a").
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  return mix64(seed ^ fnv1a64(tag));
}

}  // namespace vfedssd
