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

#ifndef PWSC_BLOCK_CODEC_H_
#define PWSC_BLOCK_CODEC_H_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pwsc/tensor.h"

// JPEG-like baseline: BT.601 YCbCr at 4:4:4, orthonormal 8x8 DCT, IJG
// quality-scaled quantization and adaptive range coding of the coefficients.
//
// ".pblk" layout, little-endian:
//   magic "PBLK" | version u8 = 1 | H, W u32 | quality u8
//   range-coded coefficients | CRC-32 of the coefficient payload u32

namespace pwsc {

inline constexpr uint8_t kBlockStreamVersion = 1;

using Block = std::array<double, 64>;  // row-major 8x8
using QuantTable = std::array<int, 64>;

struct QuantTables {
  QuantTable luma;
  QuantTable chroma;
};

// Annex K.1 / K.2 base tables, row-major.
const QuantTable& BaseLumaTable();
const QuantTable& BaseChromaTable();
// Row-major index of the i-th coefficient in zigzag order.
const std::array<int, 64>& ZigzagOrder();

// IJG: 5000 / q below 50, else 200 - 2q.
int QualityScale(int quality);
QuantTables ScaledTables(int quality);

Block Dct8x8(const Block& block);
Block Idct8x8(const Block& coeffs);

// Quantized coefficients of a whole image: 3 planes (Y, Cb, Cr), each
// blocks_y x blocks_x blocks of 64 row-major integers.
struct BlockCoefficients {
  int height = 0;
  int width = 0;
  int blocks_y = 0;
  int blocks_x = 0;
  std::vector<int32_t> values;

  int32_t* block(int plane, int by, int bx) {
    return values.data() + ((static_cast<size_t>(plane) * blocks_y + by) * blocks_x + bx) * 64;
  }
  const int32_t* block(int plane, int by, int bx) const {
    return values.data() + ((static_cast<size_t>(plane) * blocks_y + by) * blocks_x + bx) * 64;
  }
};

// image: 1 x 3 x H x W in [0, 1]; edge blocks replicate the last row/column.
BlockCoefficients QuantizeBlocks(const Tensor& image, int quality);
// Back to 8-bit levels scaled to [0, 1].
Tensor ReconstructBlocks(const BlockCoefficients& coeffs, int quality);

// Lossless coefficient coding. DC is coded as the difference from the previous
// block of the plane; AC coefficients in zigzag order as size categories (0 for
// zero) up to an end-of-block symbol. Categories use adaptive tables per plane
// type and zigzag band; sign and magnitude bits follow raw.
std::vector<uint8_t> EncodeCoefficients(const BlockCoefficients& coeffs);
BlockCoefficients DecodeCoefficients(std::span<const uint8_t> payload, int height,
                                     int width);

std::vector<uint8_t> BlockEncode(const Tensor& image, int quality);
Tensor BlockDecode(std::span<const uint8_t> stream);

struct BlockStreamInfo {
  int height = 0;
  int width = 0;
  int quality = 0;
};
BlockStreamInfo ReadBlockStreamInfo(std::span<const uint8_t> stream);

}  // namespace pwsc

#endif  // PWSC_BLOCK_CODEC_H_
