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

#ifndef PWSC_RANGE_CODER_H_
#define PWSC_RANGE_CODER_H_

#include <cstdint>
#include <span>
#include <vector>

#include "pwsc/entropy_model.h"

namespace pwsc {

// Byte-oriented range coder: 64-bit low (carry kept in bit 32 and resolved
// through a cached byte plus a run of pending 0xFF bytes), 32-bit range,
// renormalizing whenever range < 2^24. Symbol frequencies may use any total
// up to 2^16.
class RangeEncoder {
 public:
  void Encode(uint32_t cum, uint32_t freq, uint32_t total);
  // `bits` equiprobable raw bits, bits <= 16.
  void EncodeBits(uint32_t value, int bits);
  std::vector<uint8_t> Finish();

 private:
  void ShiftLow();

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t pending_ = 1;  // bytes held back: cache_ plus (pending_ - 1) 0xFF
  bool first_ = true;     // the very first byte is always zero and is elided
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const uint8_t> bytes);

  // Returns the cumulative-frequency slot of the next symbol; follow with
  // Consume() for the symbol that owns that slot.
  uint32_t Peek(uint32_t total);
  void Consume(uint32_t cum, uint32_t freq);
  uint32_t DecodeBits(int bits);

  // Bytes read so far (beyond the initial fill).
  size_t position() const { return pos_; }

 private:
  uint8_t NextByte();

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
  uint32_t code_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t step_ = 0;
};

// One symbol to code and the table (by channel) that models it.
struct CodedSymbol {
  int channel;
  int32_t value;
};

// Codes the sequence with the per-channel tables, followed by a 16-bit check
// of the symbols so that decoding with the wrong tables fails loudly. An
// empty sequence codes no check. Out-of-range symbols raise kInvalidArgument
// naming channel and value.
std::vector<uint8_t> RangeEncode(std::span<const CodedSymbol> symbols,
                                 std::span<const CdfTable> tables);

// Decodes count = channels.size() symbols; channels[i] selects the table of
// the i-th symbol. Truncation or a failed check raise kCorruptStream.
std::vector<int32_t> RangeDecode(std::span<const uint8_t> bytes,
                                 std::span<const CdfTable> tables,
                                 std::span<const int> channels);

// Binary search of a cumulative table for the symbol owning `slot`.
int FindSymbol(std::span<const uint32_t> cdf, uint32_t slot);

}  // namespace pwsc

#endif  // PWSC_RANGE_CODER_H_
