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

#include "pwsc/adam.h"

#include <cmath>

#include "pwsc/error.h"

namespace pwsc {

void AdamUpdate(std::span<Tensor> params, std::span<const Tensor> grads,
                AdamState& state, const AdamOptions& options) {
  PWSC_CHECK_ARG(params.size() == grads.size(),
                 "adam: parameter and gradient counts differ");
  if (state.m.empty()) {
    for (const Tensor& p : params) {
      state.m.emplace_back(p.shape(), 0.0f);
      state.v.emplace_back(p.shape(), 0.0f);
    }
  }
  PWSC_CHECK_ARG(state.m.size() == params.size(),
                 "adam: state was built for a different parameter list");
  for (size_t i = 0; i < params.size(); ++i) {
    CheckSameShape(params[i], grads[i], "adam");
    CheckSameShape(params[i], state.m[i], "adam");
  }

  ++state.step;
  const double bc1 = 1.0 - std::pow(options.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(options.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    const Tensor& g = grads[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j];
      const double mj = options.beta1 * m[j] + (1.0 - options.beta1) * gj;
      const double vj = options.beta2 * v[j] + (1.0 - options.beta2) * gj * gj;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double mhat = mj / bc1;
      const double vhat = vj / bc2;
      p[j] = static_cast<float>(p[j] - options.lr * mhat / (std::sqrt(vhat) + options.eps));
    }
  }
}

}  // namespace pwsc
