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

#include "pwsc/simd.h"

namespace pwsc::simd {
namespace {

void GemmScalar(int m, int n, int k, const float* a, int lda, const float* b,
                int ldb, float* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    float* crow = c + static_cast<size_t>(i) * ldc;
    const float* arow = a + static_cast<size_t>(i) * lda;
    for (int p = 0; p < k; ++p) {
      const float av = arow[p];
      if (av == 0.0f) continue;
      const float* brow = b + static_cast<size_t>(p) * ldb;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void AxpyScalar(size_t n, float alpha, const float* x, float* y) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void CorrelateScalar(size_t n, const float* src, const float* taps, int ntaps,
                     float* dst) {
  for (size_t i = 0; i < n; ++i) {
    float acc = 0.0f;
    for (int t = 0; t < ntaps; ++t) acc += taps[t] * src[i + t];
    dst[i] = acc;
  }
}

double SumSqDiffScalar(size_t n, const float* a, const float* b) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s;
}

double DotScalar(size_t n, const float* a, const float* b) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return s;
}

}  // namespace

const Kernels& ScalarKernels() {
  static const Kernels kTable{Isa::kScalar, "scalar",  GemmScalar,
                              AxpyScalar,   CorrelateScalar, SumSqDiffScalar,
                              DotScalar};
  return kTable;
}

}  // namespace pwsc::simd
