// Copyright 2026 The pwsc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PWSC_HASH_H_
#define PWSC_HASH_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace pwsc {

constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

// 64-bit FNV-1a.
inline uint64_t Fnv1a64(std::span<const uint8_t> bytes,
                        uint64_t state = kFnvOffset) {
  for (uint8_t b : bytes) {
    state ^= b;
    state *= kFnvPrime;
  }
  return state;
}

inline uint64_t Fnv1a64(std::string_view s, uint64_t state = kFnvOffset) {
  return Fnv1a64(
      std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(s.data()),
                               s.size()),
      state);
}

// IEEE 802.3 CRC-32 (zlib polynomial).
uint32_t Crc32(std::span<const uint8_t> bytes);

}  // namespace pwsc

#endif  // PWSC_HASH_H_
