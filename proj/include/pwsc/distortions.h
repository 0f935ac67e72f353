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

#ifndef PWSC_DISTORTIONS_H_
#define PWSC_DISTORTIONS_H_

#include <array>
#include <string>

#include "pwsc/tensor.h"

namespace pwsc {

// sRGB (D65) <-> CIELAB for single pixels; sRGB components in [0, 1].
std::array<double, 3> SrgbToLab(const std::array<double, 3>& rgb);
std::array<double, 3> LabToSrgb(const std::array<double, 3>& lab);  // unclamped

// Whole images: 1 x 3 x H x W. LabToSrgbImage clamps to [0, 1].
Tensor SrgbToLabImage(const Tensor& image);
Tensor LabToSrgbImage(const Tensor& lab);

enum class DistortionKind { kColorShift, kBlocking };

struct DistortionSpec {
  DistortionKind kind = DistortionKind::kColorShift;
  double level = 0.0;  // a* bias in [0, 50], or quality in [10, 90]

  void Validate() const;
};

DistortionKind ParseDistortionKind(const std::string& name);  // "color" | "blocking"
std::string DistortionKindName(DistortionKind kind);

// Adds `bias` to a* and converts back with gamut clamping.
Tensor ColorShift(const Tensor& image, double bias);
// Round trip through the baseline block codec.
Tensor Blocking(const Tensor& image, int quality);
Tensor ApplyDistortion(const Tensor& image, const DistortionSpec& spec);

}  // namespace pwsc

#endif  // PWSC_DISTORTIONS_H_
