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

#include <cstdlib>
#include <cstring>

#include "pwsc/simd.h"

namespace pwsc::simd {

#if defined(PWSC_HAVE_AVX2)
const Kernels* Avx2KernelsUnchecked();
#endif

namespace {

bool CpuHasAvx2Fma() {
#if defined(PWSC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Kernels& Select() {
  const char* env = std::getenv("PWSC_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return ScalarKernels();
  if (const Kernels* avx2 = Avx2Kernels()) return *avx2;
  return ScalarKernels();
}

}  // namespace

const Kernels* Avx2Kernels() {
#if defined(PWSC_HAVE_AVX2)
  static const bool supported = CpuHasAvx2Fma();
  return supported ? Avx2KernelsUnchecked() : nullptr;
#else
  return nullptr;
#endif
}

const Kernels& Active() {
  static const Kernels& table = Select();
  return table;
}

const char* IsaName(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace pwsc::simd
