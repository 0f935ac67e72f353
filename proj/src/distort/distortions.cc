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

#include "pwsc/distortions.h"

#include <algorithm>
#include <cmath>

#include "pwsc/block_codec.h"
#include "pwsc/error.h"

namespace pwsc {
namespace {

// D65 reference white, Y normalized to 1.
constexpr double kXn = 0.95047, kYn = 1.0, kZn = 1.08883;
constexpr double kDelta = 6.0 / 29.0;

double ToLinear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double FromLinear(double c) {
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double LabF(double t) {
  return t > kDelta * kDelta * kDelta ? std::cbrt(t) : t / (3 * kDelta * kDelta) + 4.0 / 29.0;
}

double LabFInv(double t) {
  return t > kDelta ? t * t * t : 3 * kDelta * kDelta * (t - 4.0 / 29.0);
}

Tensor MapPixels(const Tensor& image,
                 std::array<double, 3> (*fn)(const std::array<double, 3>&), bool clamp) {
  PWSC_CHECK_ARG(image.rank() == 4 && image.dim(1) == 3,
                 "color: expected N x 3 x H x W, got " + ShapeString(image.shape()));
  Tensor out(image.shape());
  const size_t plane = static_cast<size_t>(image.dim(2)) * image.dim(3);
  for (int b = 0; b < image.dim(0); ++b) {
    const float* src = image.ptr() + static_cast<size_t>(b) * 3 * plane;
    float* dst = out.data().data() + static_cast<size_t>(b) * 3 * plane;
    for (size_t i = 0; i < plane; ++i) {
      auto v = fn({src[i], src[plane + i], src[2 * plane + i]});
      for (int c = 0; c < 3; ++c) {
        const double x = clamp ? std::clamp(v[static_cast<size_t>(c)], 0.0, 1.0) : v[static_cast<size_t>(c)];
        dst[c * plane + i] = static_cast<float>(x);
      }
    }
  }
  return out;
}

}  // namespace

std::array<double, 3> SrgbToLab(const std::array<double, 3>& rgb) {
  const double r = ToLinear(rgb[0]), g = ToLinear(rgb[1]), b = ToLinear(rgb[2]);
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  const double fx = LabF(x / kXn), fy = LabF(y / kYn), fz = LabF(z / kZn);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

std::array<double, 3> LabToSrgb(const std::array<double, 3>& lab) {
  const double fy = (lab[0] + 16.0) / 116.0;
  const double fx = fy + lab[1] / 500.0, fz = fy - lab[2] / 200.0;
  const double x = kXn * LabFInv(fx), y = kYn * LabFInv(fy), z = kZn * LabFInv(fz);
  const double r = 3.2404542 * x - 1.5371385 * y - 0.4985314 * z;
  const double g = -0.9692660 * x + 1.8760108 * y + 0.0415560 * z;
  const double b = 0.0556434 * x - 0.2040259 * y + 1.0572252 * z;
  // Negative linear values have no sRGB encoding; clamp before the curve.
  return {FromLinear(std::max(r, 0.0)), FromLinear(std::max(g, 0.0)), FromLinear(std::max(b, 0.0))};
}

Tensor SrgbToLabImage(const Tensor& image) { return MapPixels(image, SrgbToLab, false); }
Tensor LabToSrgbImage(const Tensor& lab) { return MapPixels(lab, LabToSrgb, true); }

void DistortionSpec::Validate() const {
  if (kind == DistortionKind::kColorShift) {
    PWSC_CHECK_ARG(level >= 0.0 && level <= 50.0,
                   "distort: color bias " + std::to_string(level) + " outside [0, 50]");
  } else {
    PWSC_CHECK_ARG(level >= 10.0 && level <= 90.0 && level == std::floor(level),
                   "distort: blocking quality " + std::to_string(level) +
                       " is not an integer in [10, 90]");
  }
}

DistortionKind ParseDistortionKind(const std::string& name) {
  if (name == "color" || name == "color_shift") return DistortionKind::kColorShift;
  if (name == "blocking") return DistortionKind::kBlocking;
  Fail(ErrorCode::kInvalidArgument, "distort: unknown kind '" + name + "' (color|blocking)");
}

std::string DistortionKindName(DistortionKind kind) {
  return kind == DistortionKind::kColorShift ? "color" : "blocking";
}

Tensor ColorShift(const Tensor& image, double bias) {
  DistortionSpec{DistortionKind::kColorShift, bias}.Validate();
  Tensor lab = SrgbToLabImage(image);
  const size_t plane = static_cast<size_t>(lab.dim(2)) * lab.dim(3);
  for (int b = 0; b < lab.dim(0); ++b) {
    float* a = lab.data().data() + (static_cast<size_t>(b) * 3 + 1) * plane;
    for (size_t i = 0; i < plane; ++i) a[i] += static_cast<float>(bias);
  }
  return LabToSrgbImage(lab);
}

Tensor Blocking(const Tensor& image, int quality) {
  DistortionSpec{DistortionKind::kBlocking, static_cast<double>(quality)}.Validate();
  return BlockDecode(BlockEncode(image, quality));
}

Tensor ApplyDistortion(const Tensor& image, const DistortionSpec& spec) {
  spec.Validate();
  return spec.kind == DistortionKind::kColorShift
             ? ColorShift(image, spec.level)
             : Blocking(image, static_cast<int>(spec.level));
}

}  // namespace pwsc
