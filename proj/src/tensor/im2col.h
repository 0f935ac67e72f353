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

#ifndef PWSC_SRC_TENSOR_IM2COL_H_
#define PWSC_SRC_TENSOR_IM2COL_H_

namespace pwsc::internal {

// col[(c*K + ki)*K + kj][oy*ow + ox] = in[c][oy*stride - pad + ki][ox*stride - pad + kj]
// with zeros outside the image.
void Im2Col(const float* in, int channels, int h, int w, int k, int stride,
            int pad, int oh, int ow, float* col);

// Adjoint of Im2Col: scatter-adds col back onto `in`.
void Col2ImAdd(const float* col, int channels, int h, int w, int k, int stride,
               int pad, int oh, int ow, float* in);

// dst[cols x rows] = transpose(src[rows x cols]).
void Transpose(const float* src, int rows, int cols, float* dst);

}  // namespace pwsc::internal

#endif  // PWSC_SRC_TENSOR_IM2COL_H_
