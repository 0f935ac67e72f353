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

#ifndef PWSC_ADAM_H_
#define PWSC_ADAM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "pwsc/tensor.h"

namespace pwsc {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment buffers, one per parameter tensor, and the shared step
// counter used for bias correction.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  int64_t step = 0;
};

// One Adam step with bias correction. Moments are created on first use.
void AdamUpdate(std::span<Tensor> params, std::span<const Tensor> grads,
                AdamState& state, const AdamOptions& options);

}  // namespace pwsc

#endif  // PWSC_ADAM_H_
