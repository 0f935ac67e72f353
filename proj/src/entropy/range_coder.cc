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

#include "pwsc/range_coder.h"

#include <algorithm>
#include <string>

#include "pwsc/error.h"
#include "pwsc/hash.h"

namespace pwsc {
namespace {

constexpr uint32_t kTop = 1u << 24;

uint16_t SymbolCheck(std::span<const int32_t> values) {
  const uint32_t crc = Crc32(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(values.data()), values.size() * sizeof(int32_t)));
  return static_cast<uint16_t>(crc ^ (crc >> 16));
}

const CdfTable& TableFor(std::span<const CdfTable> tables, int channel) {
  if (channel < 0 || static_cast<size_t>(channel) >= tables.size()) {
    Fail(ErrorCode::kInvalidArgument,
         "range coder: no table for channel " + std::to_string(channel));
  }
  return tables[static_cast<size_t>(channel)];
}

}  // namespace

void RangeEncoder::ShiftLow() {
  if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const uint8_t carry = static_cast<uint8_t>(low_ >> 32);
    uint8_t byte = cache_;
    do {
      if (first_) {
        first_ = false;
      } else {
        out_.push_back(static_cast<uint8_t>(byte + carry));
      }
      byte = 0xFF;
    } while (--pending_ != 0);
    cache_ = static_cast<uint8_t>(low_ >> 24);
  }
  ++pending_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::Encode(uint32_t cum, uint32_t freq, uint32_t total) {
  const uint32_t r = range_ / total;
  low_ += static_cast<uint64_t>(r) * cum;
  range_ = r * freq;
  while (range_ < kTop) {
    range_ <<= 8;
    ShiftLow();
  }
}

void RangeEncoder::EncodeBits(uint32_t value, int bits) {
  Encode(value, 1, 1u << bits);
}

std::vector<uint8_t> RangeEncoder::Finish() {
  for (int i = 0; i < 5; ++i) ShiftLow();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> bytes) : bytes_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | NextByte();
}

uint8_t RangeDecoder::NextByte() {
  if (pos_ >= bytes_.size()) {
    Fail(ErrorCode::kCorruptStream,
         "range decoder: payload truncated after " + std::to_string(pos_) + " bytes");
  }
  return bytes_[pos_++];
}

uint32_t RangeDecoder::Peek(uint32_t total) {
  step_ = range_ / total;
  const uint32_t slot = code_ / step_;
  return std::min(slot, total - 1);
}

void RangeDecoder::Consume(uint32_t cum, uint32_t freq) {
  code_ -= step_ * cum;
  range_ = step_ * freq;
  while (range_ < kTop) {
    code_ = (code_ << 8) | NextByte();
    range_ <<= 8;
  }
}

uint32_t RangeDecoder::DecodeBits(int bits) {
  const uint32_t v = Peek(1u << bits);
  Consume(v, 1);
  return v;
}

int FindSymbol(std::span<const uint32_t> cdf, uint32_t slot) {
  // Largest i with cdf[i] <= slot.
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), slot);
  return static_cast<int>(it - cdf.begin()) - 1;
}

std::vector<uint8_t> RangeEncode(std::span<const CodedSymbol> symbols,
                                 std::span<const CdfTable> tables) {
  RangeEncoder enc;
  std::vector<int32_t> values;
  values.reserve(symbols.size());
  for (const CodedSymbol& s : symbols) {
    const CdfTable& t = TableFor(tables, s.channel);
    if (s.value < t.q_min || s.value > t.q_max) {
      Fail(ErrorCode::kInvalidArgument,
           "range coder: value " + std::to_string(s.value) + " on channel " +
               std::to_string(s.channel) + " outside [" + std::to_string(t.q_min) +
               ", " + std::to_string(t.q_max) + "]");
    }
    const size_t i = static_cast<size_t>(s.value - t.q_min);
    enc.Encode(t.cdf[i], t.cdf[i + 1] - t.cdf[i], kCdfTotal);
    values.push_back(s.value);
  }
  if (!symbols.empty()) enc.EncodeBits(SymbolCheck(values), 16);
  return enc.Finish();
}

std::vector<int32_t> RangeDecode(std::span<const uint8_t> bytes,
                                 std::span<const CdfTable> tables,
                                 std::span<const int> channels) {
  RangeDecoder dec(bytes);
  std::vector<int32_t> values;
  values.reserve(channels.size());
  for (int ch : channels) {
    const CdfTable& t = TableFor(tables, ch);
    const uint32_t slot = dec.Peek(kCdfTotal);
    const int i = FindSymbol(t.cdf, slot);
    if (i < 0 || i >= t.num_symbols()) {
      Fail(ErrorCode::kCorruptStream, "range decoder: slot outside the table");
    }
    dec.Consume(t.cdf[static_cast<size_t>(i)],
                t.cdf[static_cast<size_t>(i) + 1] - t.cdf[static_cast<size_t>(i)]);
    values.push_back(t.q_min + i);
  }
  if (!channels.empty() && dec.DecodeBits(16) != SymbolCheck(values)) {
    Fail(ErrorCode::kCorruptStream, "range decoder: symbol check mismatch");
  }
  return values;
}

}  // namespace pwsc
