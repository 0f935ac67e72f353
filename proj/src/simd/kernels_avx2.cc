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

// Compiled with -mavx2 -mfma. Nothing in this file may run before the
// dispatcher has confirmed CPU support.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "pwsc/simd.h"

namespace pwsc::simd {
namespace {

inline double HorizontalSum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// R rows of C times a 16-column panel.
template <int R>
void MicroKernel16(int k, const float* a, int lda, const float* b, int ldb,
                   float* c, int ldc) {
  __m256 acc[R][2];
  for (int r = 0; r < R; ++r) {
    acc[r][0] = _mm256_loadu_ps(c + r * ldc);
    acc[r][1] = _mm256_loadu_ps(c + r * ldc + 8);
  }
  for (int p = 0; p < k; ++p) {
    const float* bp = b + static_cast<size_t>(p) * ldb;
    const __m256 b0 = _mm256_loadu_ps(bp);
    const __m256 b1 = _mm256_loadu_ps(bp + 8);
    for (int r = 0; r < R; ++r) {
      const __m256 av = _mm256_broadcast_ss(a + r * lda + p);
      acc[r][0] = _mm256_fmadd_ps(av, b0, acc[r][0]);
      acc[r][1] = _mm256_fmadd_ps(av, b1, acc[r][1]);
    }
  }
  for (int r = 0; r < R; ++r) {
    _mm256_storeu_ps(c + r * ldc, acc[r][0]);
    _mm256_storeu_ps(c + r * ldc + 8, acc[r][1]);
  }
}

template <int R>
void MicroKernel8(int k, const float* a, int lda, const float* b, int ldb,
                  float* c, int ldc) {
  __m256 acc[R];
  for (int r = 0; r < R; ++r) acc[r] = _mm256_loadu_ps(c + r * ldc);
  for (int p = 0; p < k; ++p) {
    const __m256 b0 = _mm256_loadu_ps(b + static_cast<size_t>(p) * ldb);
    for (int r = 0; r < R; ++r) {
      acc[r] = _mm256_fmadd_ps(_mm256_broadcast_ss(a + r * lda + p), b0,
                               acc[r]);
    }
  }
  for (int r = 0; r < R; ++r) _mm256_storeu_ps(c + r * ldc, acc[r]);
}

template <int R>
void RowBlock(int n, int k, const float* a, int lda, const float* b, int ldb,
              float* c, int ldc, int j0, int j1) {
  int j = j0;
  for (; j + 16 <= j1; j += 16) MicroKernel16<R>(k, a, lda, b + j, ldb, c + j, ldc);
  for (; j + 8 <= j1; j += 8) MicroKernel8<R>(k, a, lda, b + j, ldb, c + j, ldc);
  for (; j < j1; ++j) {
    for (int r = 0; r < R; ++r) {
      float acc = c[r * ldc + j];
      for (int p = 0; p < k; ++p) {
        acc = std::fma(a[r * lda + p], b[static_cast<size_t>(p) * ldb + j], acc);
      }
      c[r * ldc + j] = acc;
    }
  }
  (void)n;
}

using RowBlockFn = void (*)(int, int, const float*, int, const float*, int,
                            float*, int, int, int);
constexpr RowBlockFn kRowBlocks[7] = {nullptr,     RowBlock<1>, RowBlock<2>,
                                      RowBlock<3>, RowBlock<4>, RowBlock<5>,
                                      RowBlock<6>};

void GemmAvx2(int m, int n, int k, const float* a, int lda, const float* b,
              int ldb, float* c, int ldc) {
  // Column panels sized so a k x panel slab of B stays cache resident while
  // every row block of A streams over it.
  const int panel = std::max(16, std::min(n, (1 << 16) / std::max(k, 1) / 16 * 16));
  for (int j0 = 0; j0 < n; j0 += panel) {
    const int j1 = std::min(n, j0 + panel);
    for (int i = 0; i < m; i += 6) {
      const int rows = std::min(6, m - i);
      kRowBlocks[rows](n, k, a + static_cast<size_t>(i) * lda, lda, b, ldb,
                       c + static_cast<size_t>(i) * ldc, ldc, j0, j1);
    }
  }
}

void AxpyAvx2(size_t n, float alpha, const float* x, float* y) {
  const __m256 av = _mm256_set1_ps(alpha);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i),
                                            _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void CorrelateAvx2(size_t n, const float* src, const float* taps, int ntaps,
                   float* dst) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 acc = _mm256_setzero_ps();
    for (int t = 0; t < ntaps; ++t) {
      acc = _mm256_fmadd_ps(_mm256_set1_ps(taps[t]),
                            _mm256_loadu_ps(src + i + t), acc);
    }
    _mm256_storeu_ps(dst + i, acc);
  }
  for (; i < n; ++i) {
    float acc = 0.0f;
    for (int t = 0; t < ntaps; ++t) acc = std::fma(taps[t], src[i + t], acc);
    dst[i] = acc;
  }
}

double SumSqDiffAvx2(size_t n, const float* a, const float* b) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_cvtps_pd(_mm_loadu_ps(a + i)),
                                     _mm256_cvtps_pd(_mm_loadu_ps(b + i)));
    const __m256d d1 =
        _mm256_sub_pd(_mm256_cvtps_pd(_mm_loadu_ps(a + i + 4)),
                      _mm256_cvtps_pd(_mm_loadu_ps(b + i + 4)));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  double s = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s;
}

double DotAvx2(size_t n, const float* a, const float* b) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm_loadu_ps(a + i)),
                           _mm256_cvtps_pd(_mm_loadu_ps(b + i)), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm_loadu_ps(a + i + 4)),
                           _mm256_cvtps_pd(_mm_loadu_ps(b + i + 4)), acc1);
  }
  double s = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

}  // namespace

const Kernels* Avx2KernelsUnchecked() {
  static const Kernels kTable{Isa::kAvx2, "avx2",   GemmAvx2,   AxpyAvx2,
                              CorrelateAvx2, SumSqDiffAvx2, DotAvx2};
  return &kTable;
}

}  // namespace pwsc::simd
