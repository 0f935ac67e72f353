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

#ifndef PWSC_WEIGHT_FILE_H_
#define PWSC_WEIGHT_FILE_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pwsc/tensor.h"

// "PWGT" weight container, shared by codec models and feature extractors.
//
//   magic "PWGT" | version u8 = 1 | u32 tensor count
//   per tensor: u16 name length | UTF-8 name | u8 rank | u32 dims[rank] |
//               raw binary32 payload
//   u64 FNV-1a of every preceding byte
//
// All integers little-endian.

namespace pwsc {

inline constexpr uint8_t kWeightFileVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

std::vector<uint8_t> SerializeWeights(std::span<const NamedTensor> tensors);

// Verifies magic, version and trailing hash. Corruption raises
// ErrorCode::kCorruptStream; unsupported versions raise kDataError.
std::vector<NamedTensor> ParseWeights(std::span<const uint8_t> bytes);

// Trailing hash of a serialized weight file.
uint64_t WeightFileHash(std::span<const uint8_t> bytes);

void SaveWeightFile(const std::string& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> LoadWeightFile(const std::string& path);

}  // namespace pwsc

#endif  // PWSC_WEIGHT_FILE_H_
