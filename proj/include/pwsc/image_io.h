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

#ifndef PWSC_IMAGE_IO_H_
#define PWSC_IMAGE_IO_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pwsc/tensor.h"

namespace pwsc {

// 8-bit PNG (gray, RGB, palette; alpha dropped) and binary PPM (P6, maxval
// 255). Pixels come back as a 1 x 3 x H x W tensor in [0, 1]. 16-bit inputs,
// unknown formats and truncated files raise kDataError.
Tensor DecodeImage(std::span<const uint8_t> bytes);
Tensor DecodePng(std::span<const uint8_t> bytes);
Tensor DecodePpm(std::span<const uint8_t> bytes);

// Quantizes with round-half-up to 8 bits: floor(255 v + 0.5), clamped.
std::vector<uint8_t> EncodePng(const Tensor& image);
std::vector<uint8_t> EncodePpm(const Tensor& image);
uint8_t ToByte(float v);

Tensor LoadImage(const std::string& path);
// Format from the extension: ".ppm" writes P6, anything else PNG.
void SaveImage(const Tensor& image, const std::string& path);

}  // namespace pwsc

#endif  // PWSC_IMAGE_IO_H_
