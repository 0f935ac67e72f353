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

#ifndef PWSC_BITSTREAM_H_
#define PWSC_BITSTREAM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "pwsc/codec_model.h"
#include "pwsc/range_coder.h"

// ".pwsc" container, all integers little-endian:
//
//   magic "PWSC" | version u8 = 1 | model fingerprint u64
//   image H, W u32 | padded H, W u32 | latent C, h, w u32
//   per channel: q_min i32, q_max i32
//   range-coded payload | CRC-32 of the payload u32

namespace pwsc {

inline constexpr uint8_t kBitstreamVersion = 1;

struct BitstreamHeader {
  uint64_t fingerprint = 0;
  uint32_t image_height = 0;
  uint32_t image_width = 0;
  uint32_t padded_height = 0;
  uint32_t padded_width = 0;
  uint32_t latent_channels = 0;
  uint32_t latent_height = 0;
  uint32_t latent_width = 0;
  std::vector<int32_t> q_min;
  std::vector<int32_t> q_max;

  bool operator==(const BitstreamHeader&) const = default;
};

struct Bitstream {
  BitstreamHeader header;
  std::vector<uint8_t> payload;
};

std::vector<uint8_t> PackBitstream(const LatentCode& code,
                                   std::span<const uint8_t> payload,
                                   uint64_t fingerprint);

// Bad magic or version raise kDataError ("unsupported format"); a CRC
// mismatch or truncation raise kCorruptStream.
Bitstream UnpackBitstream(std::span<const uint8_t> bytes);

double BitsPerPixel(size_t total_bytes, int height, int width);

// Channel-major symbol order: channel 0 in raster order, then channel 1, ...
std::vector<CodedSymbol> LatentSymbols(const LatentCode& code);

struct CompressedImage {
  std::vector<uint8_t> bytes;  // the whole .pwsc file
  LatentCode code;
  size_t payload_bytes = 0;
  double bpp = 0.0;             // 8 * bytes.size() / (H * W)
  // Entropy-model code length of the payload symbols: floored prior pmf
  // renormalized over each channel's coded range, before table quantization.
  double estimated_bits = 0.0;
};

CompressedImage CompressImage(const ModelBundle& model, const Tensor& image);

// Refuses streams whose fingerprint differs from `model` (kMismatch).
LatentCode DecodeLatents(const ModelBundle& model, std::span<const uint8_t> bytes);
Tensor DecompressImage(const ModelBundle& model, std::span<const uint8_t> bytes);

}  // namespace pwsc

#endif  // PWSC_BITSTREAM_H_
