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

#include "pwsc/block_codec.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <string>

#include "pwsc/byte_io.h"
#include "pwsc/error.h"
#include "pwsc/hash.h"
#include "pwsc/range_coder.h"

namespace pwsc {
namespace {

constexpr QuantTable kLuma = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

constexpr QuantTable kChroma = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

constexpr std::array<int, 64> kZigzag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

// cos basis scaled for orthonormality: kBasis[u][x].
struct DctBasis {
  double m[8][8];
  DctBasis() {
    for (int u = 0; u < 8; ++u) {
      const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) {
        m[u][x] = a * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
      }
    }
  }
};
const DctBasis& Basis() {
  static const DctBasis b;
  return b;
}

int32_t RoundHalfAway(double v) {
  return static_cast<int32_t>(v < 0 ? -std::floor(-v + 0.5) : std::floor(v + 0.5));
}

// Adaptive frequency table over a small alphabet.
class AdaptiveModel {
 public:
  explicit AdaptiveModel(int symbols)
      : freq_(static_cast<size_t>(symbols), 1), total_(static_cast<uint32_t>(symbols)) {}

  void Encode(RangeEncoder& enc, int s) {
    uint32_t cum = 0;
    for (int i = 0; i < s; ++i) cum += freq_[static_cast<size_t>(i)];
    enc.Encode(cum, freq_[static_cast<size_t>(s)], total_);
    Update(s);
  }

  int Decode(RangeDecoder& dec) {
    const uint32_t slot = dec.Peek(total_);
    uint32_t cum = 0;
    int s = 0;
    while (cum + freq_[static_cast<size_t>(s)] <= slot) cum += freq_[static_cast<size_t>(s++)];
    dec.Consume(cum, freq_[static_cast<size_t>(s)]);
    Update(s);
    return s;
  }

 private:
  static constexpr uint32_t kIncrement = 24;
  static constexpr uint32_t kLimit = 1u << 16;

  void Update(int s) {
    freq_[static_cast<size_t>(s)] += kIncrement;
    total_ += kIncrement;
    if (total_ > kLimit) {
      total_ = 0;
      for (uint32_t& f : freq_) {
        f = (f + 1) / 2;
        total_ += f;
      }
    }
  }

  std::vector<uint32_t> freq_;
  uint32_t total_;
};

constexpr int kCategories = 17;  // 0 .. 16 magnitude bits
constexpr int kEob = kCategories;
constexpr int kBands = 8;

int Band(int zigzag_index) {
  static constexpr int kStarts[kBands] = {1, 3, 6, 10, 15, 21, 28, 36};
  int b = 0;
  while (b + 1 < kBands && zigzag_index >= kStarts[b + 1]) ++b;
  return b;
}

int Category(int32_t v) {
  return v == 0 ? 0 : std::bit_width(static_cast<uint32_t>(v < 0 ? -v : v));
}

void EncodeValue(RangeEncoder& enc, AdaptiveModel& model, int32_t v) {
  const int cat = Category(v);
  model.Encode(enc, cat);
  if (cat == 0) return;
  const uint32_t mag = static_cast<uint32_t>(v < 0 ? -v : v);
  enc.EncodeBits(v < 0 ? 1 : 0, 1);
  if (cat > 1) enc.EncodeBits(mag & ((1u << (cat - 1)) - 1), cat - 1);
}

int32_t DecodeMagnitude(RangeDecoder& dec, int cat) {
  const bool neg = dec.DecodeBits(1) != 0;
  uint32_t mag = 1u << (cat - 1);
  if (cat > 1) mag |= dec.DecodeBits(cat - 1);
  return neg ? -static_cast<int32_t>(mag) : static_cast<int32_t>(mag);
}

struct Models {
  std::vector<AdaptiveModel> dc;
  std::vector<AdaptiveModel> ac;
  Models() {
    for (int t = 0; t < 2; ++t) {
      dc.emplace_back(kCategories);
      for (int b = 0; b < kBands; ++b) ac.emplace_back(kCategories + 1);
    }
  }
  AdaptiveModel& Ac(int plane, int zz) { return ac[static_cast<size_t>((plane > 0) * kBands + Band(zz))]; }
  AdaptiveModel& Dc(int plane) { return dc[static_cast<size_t>(plane > 0)]; }
};

// Keeps DC differences within 16 magnitude bits.
constexpr int32_t kMaxMagnitude = (1 << 15) - 1;

void CheckGeometry(int height, int width) {
  PWSC_CHECK_ARG(height > 0 && width > 0, "block codec: empty image");
}

}  // namespace

const QuantTable& BaseLumaTable() { return kLuma; }
const QuantTable& BaseChromaTable() { return kChroma; }
const std::array<int, 64>& ZigzagOrder() { return kZigzag; }

int QualityScale(int quality) {
  PWSC_CHECK_ARG(quality >= 1 && quality <= 100,
                 "block codec: quality " + std::to_string(quality) + " outside 1..100");
  return quality < 50 ? 5000 / quality : 200 - 2 * quality;
}

QuantTables ScaledTables(int quality) {
  const int scale = QualityScale(quality);
  auto apply = [scale](const QuantTable& base) {
    QuantTable t;
    for (int i = 0; i < 64; ++i) {
      // round(base * scale / 100) with integer half-up.
      const int v = (base[static_cast<size_t>(i)] * scale + 50) / 100;
      t[static_cast<size_t>(i)] = std::clamp(v, 1, 255);
    }
    return t;
  };
  return {apply(kLuma), apply(kChroma)};
}

Block Dct8x8(const Block& block) {
  const auto& c = Basis().m;
  Block tmp{}, out{};
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) s += c[u][x] * block[static_cast<size_t>(y * 8 + x)];
      tmp[static_cast<size_t>(y * 8 + u)] = s;
    }
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) s += c[v][y] * tmp[static_cast<size_t>(y * 8 + u)];
      out[static_cast<size_t>(v * 8 + u)] = s;
    }
  return out;
}

Block Idct8x8(const Block& coeffs) {
  const auto& c = Basis().m;
  Block tmp{}, out{};
  for (int v = 0; v < 8; ++v)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += c[u][x] * coeffs[static_cast<size_t>(v * 8 + u)];
      tmp[static_cast<size_t>(v * 8 + x)] = s;
    }
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += c[v][y] * tmp[static_cast<size_t>(v * 8 + x)];
      out[static_cast<size_t>(y * 8 + x)] = s;
    }
  return out;
}

BlockCoefficients QuantizeBlocks(const Tensor& image, int quality) {
  PWSC_CHECK_ARG(image.rank() == 4 && image.dim(0) == 1 && image.dim(1) == 3,
                 "block codec: expected 1 x 3 x H x W, got " + ShapeString(image.shape()));
  const int h = image.dim(2), w = image.dim(3);
  CheckGeometry(h, w);
  const QuantTables tables = ScaledTables(quality);
  BlockCoefficients out;
  out.height = h;
  out.width = w;
  out.blocks_y = (h + 7) / 8;
  out.blocks_x = (w + 7) / 8;
  out.values.resize(static_cast<size_t>(3) * out.blocks_y * out.blocks_x * 64);

  // Level-shifted YCbCr planes in 8-bit units.
  const size_t n = static_cast<size_t>(h) * w;
  std::vector<double> ycc(3 * n);
  for (size_t i = 0; i < n; ++i) {
    const double r = 255.0 * image.ptr()[i], g = 255.0 * image.ptr()[n + i],
                 b = 255.0 * image.ptr()[2 * n + i];
    ycc[i] = 0.299 * r + 0.587 * g + 0.114 * b - 128.0;
    ycc[n + i] = -0.168736 * r - 0.331264 * g + 0.5 * b;
    ycc[2 * n + i] = 0.5 * r - 0.418688 * g - 0.081312 * b;
  }
  for (int p = 0; p < 3; ++p) {
    const QuantTable& q = p == 0 ? tables.luma : tables.chroma;
    for (int by = 0; by < out.blocks_y; ++by)
      for (int bx = 0; bx < out.blocks_x; ++bx) {
        Block blk;
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x) {
            const int sy = std::min(by * 8 + y, h - 1), sx = std::min(bx * 8 + x, w - 1);
            blk[static_cast<size_t>(y * 8 + x)] = ycc[p * n + static_cast<size_t>(sy) * w + sx];
          }
        const Block coef = Dct8x8(blk);
        int32_t* dst = out.block(p, by, bx);
        for (int i = 0; i < 64; ++i) {
          dst[i] = std::clamp(RoundHalfAway(coef[static_cast<size_t>(i)] / q[static_cast<size_t>(i)]),
                              -kMaxMagnitude, kMaxMagnitude);
        }
      }
  }
  return out;
}

Tensor ReconstructBlocks(const BlockCoefficients& coeffs, int quality) {
  const QuantTables tables = ScaledTables(quality);
  const int h = coeffs.height, w = coeffs.width;
  const size_t n = static_cast<size_t>(h) * w;
  std::vector<double> ycc(3 * n);
  for (int p = 0; p < 3; ++p) {
    const QuantTable& q = p == 0 ? tables.luma : tables.chroma;
    for (int by = 0; by < coeffs.blocks_y; ++by)
      for (int bx = 0; bx < coeffs.blocks_x; ++bx) {
        const int32_t* src = coeffs.block(p, by, bx);
        Block coef;
        for (int i = 0; i < 64; ++i) {
          coef[static_cast<size_t>(i)] = static_cast<double>(src[i]) * q[static_cast<size_t>(i)];
        }
        const Block blk = Idct8x8(coef);
        for (int y = 0; y < 8 && by * 8 + y < h; ++y)
          for (int x = 0; x < 8 && bx * 8 + x < w; ++x) {
            ycc[p * n + static_cast<size_t>(by * 8 + y) * w + bx * 8 + x] =
                blk[static_cast<size_t>(y * 8 + x)];
          }
      }
  }
  Tensor out({1, 3, h, w});
  auto to_unit = [](double v) {
    return static_cast<float>(std::clamp(std::floor(v + 0.5), 0.0, 255.0) / 255.0);
  };
  for (size_t i = 0; i < n; ++i) {
    const double y = ycc[i] + 128.0, cb = ycc[n + i], cr = ycc[2 * n + i];
    out.data()[i] = to_unit(y + 1.402 * cr);
    out.data()[n + i] = to_unit(y - 0.344136 * cb - 0.714136 * cr);
    out.data()[2 * n + i] = to_unit(y + 1.772 * cb);
  }
  return out;
}

std::vector<uint8_t> EncodeCoefficients(const BlockCoefficients& coeffs) {
  RangeEncoder enc;
  Models models;
  for (int p = 0; p < 3; ++p) {
    int32_t prev_dc = 0;
    for (int by = 0; by < coeffs.blocks_y; ++by)
      for (int bx = 0; bx < coeffs.blocks_x; ++bx) {
        const int32_t* blk = coeffs.block(p, by, bx);
        EncodeValue(enc, models.Dc(p), blk[0] - prev_dc);
        prev_dc = blk[0];
        int last = 0;
        for (int i = 1; i < 64; ++i) {
          if (blk[kZigzag[static_cast<size_t>(i)]] != 0) last = i;
        }
        for (int i = 1; i <= last; ++i) {
          EncodeValue(enc, models.Ac(p, i), blk[kZigzag[static_cast<size_t>(i)]]);
        }
        if (last < 63) models.Ac(p, last + 1).Encode(enc, kEob);
      }
  }
  return enc.Finish();
}

BlockCoefficients DecodeCoefficients(std::span<const uint8_t> payload, int height, int width) {
  CheckGeometry(height, width);
  BlockCoefficients out;
  out.height = height;
  out.width = width;
  out.blocks_y = (height + 7) / 8;
  out.blocks_x = (width + 7) / 8;
  out.values.assign(static_cast<size_t>(3) * out.blocks_y * out.blocks_x * 64, 0);
  RangeDecoder dec(payload);
  Models models;
  for (int p = 0; p < 3; ++p) {
    int32_t prev_dc = 0;
    for (int by = 0; by < out.blocks_y; ++by)
      for (int bx = 0; bx < out.blocks_x; ++bx) {
        int32_t* blk = out.block(p, by, bx);
        const int dc_cat = models.Dc(p).Decode(dec);
        prev_dc += dc_cat == 0 ? 0 : DecodeMagnitude(dec, dc_cat);
        blk[0] = prev_dc;
        for (int i = 1; i < 64; ++i) {
          const int cat = models.Ac(p, i).Decode(dec);
          if (cat == kEob) break;
          if (cat != 0) blk[kZigzag[static_cast<size_t>(i)]] = DecodeMagnitude(dec, cat);
        }
      }
  }
  return out;
}

std::vector<uint8_t> BlockEncode(const Tensor& image, int quality) {
  const BlockCoefficients coeffs = QuantizeBlocks(image, quality);
  const auto payload = EncodeCoefficients(coeffs);
  ByteWriter w;
  w.Str("PBLK");
  w.U8(kBlockStreamVersion);
  w.U32(static_cast<uint32_t>(coeffs.height));
  w.U32(static_cast<uint32_t>(coeffs.width));
  w.U8(static_cast<uint8_t>(quality));
  w.Bytes(payload);
  w.U32(Crc32(payload));
  return std::move(w.bytes());
}

namespace {

struct ParsedBlockStream {
  BlockStreamInfo info;
  std::span<const uint8_t> payload;
};

ParsedBlockStream ParseBlockStream(std::span<const uint8_t> stream) {
  if (stream.size() < 5 || std::memcmp(stream.data(), "PBLK", 4) != 0) {
    Fail(ErrorCode::kDataError, "block stream: unsupported format (bad magic)");
  }
  if (stream[4] != kBlockStreamVersion) {
    Fail(ErrorCode::kDataError,
         "block stream: unsupported format version " + std::to_string(stream[4]));
  }
  ByteReader r(stream, "block stream");
  r.Bytes(5);
  ParsedBlockStream ps;
  const uint32_t h = r.U32(), w = r.U32();
  ps.info.quality = r.U8();
  if (h == 0 || w == 0 || h > (1u << 16) || w > (1u << 16) || ps.info.quality < 1 ||
      ps.info.quality > 100) {
    Fail(ErrorCode::kCorruptStream, "block stream: implausible header");
  }
  ps.info.height = static_cast<int>(h);
  ps.info.width = static_cast<int>(w);
  if (r.remaining() < 4) Fail(ErrorCode::kCorruptStream, "block stream: truncated");
  ps.payload = r.Bytes(r.remaining() - 4);
  if (Crc32(ps.payload) != r.U32()) {
    Fail(ErrorCode::kCorruptStream, "block stream: payload CRC mismatch");
  }
  return ps;
}

}  // namespace

BlockStreamInfo ReadBlockStreamInfo(std::span<const uint8_t> stream) {
  return ParseBlockStream(stream).info;
}

Tensor BlockDecode(std::span<const uint8_t> stream) {
  const ParsedBlockStream ps = ParseBlockStream(stream);
  const BlockCoefficients coeffs =
      DecodeCoefficients(ps.payload, ps.info.height, ps.info.width);
  return ReconstructBlocks(coeffs, ps.info.quality);
}

}  // namespace pwsc
