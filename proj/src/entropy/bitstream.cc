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

#include "pwsc/bitstream.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>

#include "pwsc/byte_io.h"
#include "pwsc/error.h"
#include "pwsc/hash.h"

namespace pwsc {

std::vector<uint8_t> PackBitstream(const LatentCode& code,
                                   std::span<const uint8_t> payload,
                                   uint64_t fingerprint) {
  PWSC_CHECK_ARG(code.q_min.size() == static_cast<size_t>(code.channels) &&
                     code.q_max.size() == static_cast<size_t>(code.channels),
                 "bitstream: symbol ranges do not match the channel count");
  ByteWriter w;
  w.Str("PWSC");
  w.U8(kBitstreamVersion);
  w.U64(fingerprint);
  w.U32(static_cast<uint32_t>(code.image_height));
  w.U32(static_cast<uint32_t>(code.image_width));
  w.U32(static_cast<uint32_t>(code.padded_height));
  w.U32(static_cast<uint32_t>(code.padded_width));
  w.U32(static_cast<uint32_t>(code.channels));
  w.U32(static_cast<uint32_t>(code.height));
  w.U32(static_cast<uint32_t>(code.width));
  for (int c = 0; c < code.channels; ++c) {
    w.I32(code.q_min[static_cast<size_t>(c)]);
    w.I32(code.q_max[static_cast<size_t>(c)]);
  }
  w.Bytes(payload);
  w.U32(Crc32(payload));
  return std::move(w.bytes());
}

Bitstream UnpackBitstream(std::span<const uint8_t> bytes) {
  if (bytes.size() < 5 || std::memcmp(bytes.data(), "PWSC", 4) != 0) {
    Fail(ErrorCode::kDataError, "bitstream: unsupported format (bad magic)");
  }
  if (bytes[4] != kBitstreamVersion) {
    Fail(ErrorCode::kDataError, "bitstream: unsupported format version " +
                                    std::to_string(bytes[4]));
  }
  ByteReader r(bytes, "bitstream");
  r.Bytes(5);
  Bitstream bs;
  BitstreamHeader& h = bs.header;
  h.fingerprint = r.U64();
  h.image_height = r.U32();
  h.image_width = r.U32();
  h.padded_height = r.U32();
  h.padded_width = r.U32();
  h.latent_channels = r.U32();
  h.latent_height = r.U32();
  h.latent_width = r.U32();
  if (h.latent_channels > 4096 || h.latent_channels > r.remaining() / 8) {
    Fail(ErrorCode::kCorruptStream, "bitstream: implausible channel count");
  }
  for (uint32_t c = 0; c < h.latent_channels; ++c) {
    h.q_min.push_back(r.I32());
    h.q_max.push_back(r.I32());
    if (h.q_min.back() > h.q_max.back()) {
      Fail(ErrorCode::kCorruptStream, "bitstream: inverted symbol range");
    }
  }
  if (r.remaining() < 4) Fail(ErrorCode::kCorruptStream, "bitstream: truncated");
  const auto payload = r.Bytes(r.remaining() - 4);
  const uint32_t crc = r.U32();
  if (Crc32(payload) != crc) {
    Fail(ErrorCode::kCorruptStream, "bitstream: payload CRC mismatch");
  }
  bs.payload.assign(payload.begin(), payload.end());
  return bs;
}

double BitsPerPixel(size_t total_bytes, int height, int width) {
  return 8.0 * static_cast<double>(total_bytes) /
         (static_cast<double>(height) * static_cast<double>(width));
}

std::vector<CodedSymbol> LatentSymbols(const LatentCode& code) {
  std::vector<CodedSymbol> out;
  out.reserve(code.values.size());
  const size_t plane = static_cast<size_t>(code.height) * code.width;
  for (size_t i = 0; i < code.values.size(); ++i) {
    out.push_back({static_cast<int>(i / plane), code.values[i]});
  }
  return out;
}

CompressedImage CompressImage(const ModelBundle& model, const Tensor& image) {
  CompressedImage out;
  out.code = AnalyzeImage(model, image);
  const FactorizedPrior prior = model.prior();
  const auto tables = BuildCdfTables(prior, out.code.q_min, out.code.q_max);
  const auto payload = RangeEncode(LatentSymbols(out.code), tables);
  out.payload_bytes = payload.size();
  out.bytes = PackBitstream(out.code, payload, model.fingerprint());
  out.bpp = BitsPerPixel(out.bytes.size(), image.dim(2), image.dim(3));
  out.estimated_bits = 0.0;
  for (int c = 0; c < out.code.channels; ++c) {
    const auto pmf = ChannelPmf(prior, c, out.code.q_min[c], out.code.q_max[c]);
    for (int32_t q : out.code.channel(c)) out.estimated_bits -= std::log2(pmf[q - out.code.q_min[c]]);
  }
  return out;
}

LatentCode DecodeLatents(const ModelBundle& model, std::span<const uint8_t> bytes) {
  const Bitstream bs = UnpackBitstream(bytes);
  const BitstreamHeader& h = bs.header;
  if (h.fingerprint != model.fingerprint()) {
    char msg[128];
    std::snprintf(msg, sizeof(msg), "model fingerprint mismatch: stream %016llx, model %016llx",
                  static_cast<unsigned long long>(h.fingerprint),
                  static_cast<unsigned long long>(model.fingerprint()));
    Fail(ErrorCode::kMismatch, msg);
  }
  const int d = model.config().downsample();
  if (h.latent_channels != static_cast<uint32_t>(model.config().latent_channels) ||
      h.latent_height * d != h.padded_height || h.latent_width * d != h.padded_width ||
      h.image_height > h.padded_height || h.image_width > h.padded_width ||
      h.padded_height - h.image_height >= static_cast<uint32_t>(d) ||
      h.padded_width - h.image_width >= static_cast<uint32_t>(d)) {
    Fail(ErrorCode::kCorruptStream, "decompress: inconsistent stream geometry");
  }
  LatentCode code;
  code.channels = static_cast<int>(h.latent_channels);
  code.height = static_cast<int>(h.latent_height);
  code.width = static_cast<int>(h.latent_width);
  code.image_height = static_cast<int>(h.image_height);
  code.image_width = static_cast<int>(h.image_width);
  code.padded_height = static_cast<int>(h.padded_height);
  code.padded_width = static_cast<int>(h.padded_width);
  code.fingerprint = h.fingerprint;
  code.q_min = h.q_min;
  code.q_max = h.q_max;

  const auto tables = BuildCdfTables(model.prior(), code.q_min, code.q_max);
  const size_t plane = static_cast<size_t>(code.height) * code.width;
  std::vector<int> channels(plane * code.channels);
  for (size_t i = 0; i < channels.size(); ++i) channels[i] = static_cast<int>(i / plane);
  code.values = RangeDecode(bs.payload, tables, channels);
  return code;
}

Tensor DecompressImage(const ModelBundle& model, std::span<const uint8_t> bytes) {
  return Decode(model, DecodeLatents(model, bytes));
}

}  // namespace pwsc
