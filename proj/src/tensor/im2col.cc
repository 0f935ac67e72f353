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

#include "im2col.h"

#include <cstddef>
#include <cstring>

namespace pwsc::internal {

void Im2Col(const float* in, int channels, int h, int w, int k, int stride,
            int pad, int oh, int ow, float* col) {
  const size_t plane = static_cast<size_t>(oh) * ow;
  for (int c = 0; c < channels; ++c) {
    const float* src = in + static_cast<size_t>(c) * h * w;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        float* dst = col + (static_cast<size_t>(c * k + ki) * k + kj) * plane;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ki;
          float* drow = dst + static_cast<size_t>(oy) * ow;
          if (iy < 0 || iy >= h) {
            std::memset(drow, 0, sizeof(float) * ow);
            continue;
          }
          const float* srow = src + static_cast<size_t>(iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kj;
            drow[ox] = (ix >= 0 && ix < w) ? srow[ix] : 0.0f;
          }
        }
      }
    }
  }
}

void Col2ImAdd(const float* col, int channels, int h, int w, int k, int stride,
               int pad, int oh, int ow, float* in) {
  const size_t plane = static_cast<size_t>(oh) * ow;
  for (int c = 0; c < channels; ++c) {
    float* dst = in + static_cast<size_t>(c) * h * w;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const float* src =
            col + (static_cast<size_t>(c * k + ki) * k + kj) * plane;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= h) continue;
          float* drow = dst + static_cast<size_t>(iy) * w;
          const float* srow = src + static_cast<size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kj;
            if (ix >= 0 && ix < w) drow[ix] += srow[ox];
          }
        }
      }
    }
  }
}

void Transpose(const float* src, int rows, int cols, float* dst) {
  constexpr int kBlock = 32;
  for (int r0 = 0; r0 < rows; r0 += kBlock) {
    for (int c0 = 0; c0 < cols; c0 += kBlock) {
      const int r1 = r0 + kBlock < rows ? r0 + kBlock : rows;
      const int c1 = c0 + kBlock < cols ? c0 + kBlock : cols;
      for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
          dst[static_cast<size_t>(c) * rows + r] =
              src[static_cast<size_t>(r) * cols + c];
        }
      }
    }
  }
}

}  // namespace pwsc::internal
