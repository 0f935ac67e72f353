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

#include "pwsc/weight_file.h"

#include <cstring>

#include "pwsc/byte_io.h"
#include "pwsc/error.h"
#include "pwsc/hash.h"

namespace pwsc {

std::vector<uint8_t> SerializeWeights(std::span<const NamedTensor> tensors) {
  ByteWriter w;
  w.Str("PWGT");
  w.U8(kWeightFileVersion);
  w.U32(static_cast<uint32_t>(tensors.size()));
  for (const NamedTensor& nt : tensors) {
    PWSC_CHECK_ARG(nt.name.size() <= 0xffff, "weight name too long: " + nt.name);
    PWSC_CHECK_ARG(nt.tensor.rank() <= 0xff, "weight rank too large: " + nt.name);
    w.U16(static_cast<uint16_t>(nt.name.size()));
    w.Str(nt.name);
    w.U8(static_cast<uint8_t>(nt.tensor.rank()));
    for (int d : nt.tensor.shape()) w.U32(static_cast<uint32_t>(d));
    for (float v : nt.tensor.data()) w.F32(v);
  }
  const uint64_t hash = Fnv1a64(w.bytes());
  w.U64(hash);
  return std::move(w.bytes());
}

uint64_t WeightFileHash(std::span<const uint8_t> bytes) {
  if (bytes.size() < 8) Fail(ErrorCode::kCorruptStream, "weight file: too short");
  ByteReader r(bytes.subspan(bytes.size() - 8), "weight file");
  return r.U64();
}

std::vector<NamedTensor> ParseWeights(std::span<const uint8_t> bytes) {
  if (bytes.size() < 4 + 1 + 4 + 8 || std::memcmp(bytes.data(), "PWGT", 4) != 0) {
    Fail(ErrorCode::kCorruptStream, "weight file: bad magic");
  }
  if (bytes[4] != kWeightFileVersion) {
    Fail(ErrorCode::kDataError,
         "weight file: unsupported version " + std::to_string(bytes[4]));
  }
  const auto body = bytes.first(bytes.size() - 8);
  if (Fnv1a64(body) != WeightFileHash(bytes)) {
    Fail(ErrorCode::kCorruptStream, "weight file: hash mismatch");
  }
  ByteReader r(body, "weight file");
  r.Bytes(5);
  const uint32_t count = r.U32();
  std::vector<NamedTensor> out;
  for (uint32_t i = 0; i < count; ++i) {
    NamedTensor nt;
    const uint16_t len = r.U16();
    const auto name = r.Bytes(len);
    nt.name.assign(name.begin(), name.end());
    const uint8_t rank = r.U8();
    Shape shape(rank);
    for (int& d : shape) {
      const uint32_t v = r.U32();
      if (v > (1u << 30)) Fail(ErrorCode::kCorruptStream, "weight file: absurd extent");
      d = static_cast<int>(v);
    }
    const size_t n = NumElements(shape);
    if (n > r.remaining() / 4) Fail(ErrorCode::kCorruptStream, "weight file: truncated payload");
    std::vector<float> data(n);
    for (float& v : data) v = r.F32();
    nt.tensor = Tensor(std::move(shape), std::move(data));
    out.push_back(std::move(nt));
  }
  if (r.remaining() != 0) Fail(ErrorCode::kCorruptStream, "weight file: trailing bytes");
  return out;
}

void SaveWeightFile(const std::string& path, std::span<const NamedTensor> tensors) {
  WriteFileBytes(path, SerializeWeights(tensors));
}

std::vector<NamedTensor> LoadWeightFile(const std::string& path) {
  return ParseWeights(ReadFileBytes(path));
}

}  // namespace pwsc
