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

#ifndef PWSC_SIMD_H_
#define PWSC_SIMD_H_

#include <cstddef>

// Data-parallel inner loops shared by the convolution, metric and codec code.
// Each kernel has a portable scalar reference and, on x86-64, an AVX2+FMA
// variant. The active table is picked once per process from CPUID; setting
// PWSC_SIMD=scalar forces the reference path.

namespace pwsc::simd {

enum class Isa { kScalar, kAvx2 };

struct Kernels {
  Isa isa;
  const char* name;

  // C[m x n] += A[m x k] * B[k x n]; row-major with leading dimensions.
  void (*gemm)(int m, int n, int k, const float* a, int lda, const float* b,
               int ldb, float* c, int ldc);

  // y[i] += alpha * x[i]
  void (*axpy)(size_t n, float alpha, const float* x, float* y);

  // Valid-mode correlation: dst[i] = sum_t taps[t] * src[i + t], i < n.
  // `src` must hold n + ntaps - 1 values.
  void (*correlate)(size_t n, const float* src, const float* taps, int ntaps,
                    float* dst);

  // sum_i (a[i] - b[i])^2 accumulated in binary64.
  double (*sum_sq_diff)(size_t n, const float* a, const float* b);

  // sum_i a[i] * b[i] accumulated in binary64.
  double (*dot)(size_t n, const float* a, const float* b);
};

const Kernels& ScalarKernels();

// Null when the build has no AVX2 variant or the CPU lacks AVX2/FMA.
const Kernels* Avx2Kernels();

// The table every caller should use.
const Kernels& Active();

const char* IsaName(Isa isa);

}  // namespace pwsc::simd

#endif  // PWSC_SIMD_H_
