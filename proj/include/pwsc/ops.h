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

#ifndef PWSC_OPS_H_
#define PWSC_OPS_H_

#include "pwsc/autograd.h"
#include "pwsc/tensor.h"

// Differentiable operator set used by the codec, the entropy model and the
// feature extractor. Every op checks its output for NaN/Inf.

namespace pwsc {

// input N x C x H x W, kernel O x C x K x K, zero padding.
// Output spatial size floor((H + 2 pad - K) / stride) + 1.
Var Conv2d(const Var& input, const Var& kernel, int stride, int pad);

// Transposed convolution. input N x Ci x H x W, kernel Ci x Co x K x K (the
// same tensor a Conv2d from Co to Ci channels would use). Output spatial size
// (H - 1) * stride - 2 pad + K + output_padding.
Var Deconv2d(const Var& input, const Var& kernel, int stride, int pad,
             int output_padding = 0);

int ConvOutputSize(int in, int kernel, int stride, int pad);
int DeconvOutputSize(int in, int kernel, int stride, int pad,
                     int output_padding = 0);

// Generalized divisive normalization over channels:
//   y_i = x_i / sqrt(beta_i + sum_j gamma_ij x_j^2)
// and its inverse (multiply instead of divide). beta has C entries, gamma is
// C x C. Entries below kGdnBetaMin / below zero are clamped and counted in the
// tape's stats.
inline constexpr float kGdnBetaMin = 1e-6f;
Var Gdn(const Var& input, const Var& beta, const Var& gamma, bool inverse);

// v^2 + floor, elementwise; the nonnegative reparameterization for GDN.
Var NonnegativeReparam(const Var& v, float floor);

// Mirror padding without repeating the edge sample.
Var ReflectPad(const Var& input, int pad);

Var AddChannelBias(const Var& input, const Var& bias);
Var Relu(const Var& x);
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Scale(const Var& x, float c);
Var Square(const Var& x);
// Scalar results, binary64 accumulation.
Var Sum(const Var& x);
Var Mean(const Var& x);
// mean((a - b)^2) over all elements.
Var MseLoss(const Var& a, const Var& b);
// N x C x H x W -> N x C x 1 x 1.
Var GlobalAvgPool(const Var& x);
// Euclidean distance between two same-shape tensors, as a scalar. The
// gradient at a == b is taken as zero.
Var L2Distance(const Var& a, const Var& b);
// Linear combination of scalar Vars: sum_i w_i * v_i.
Var WeightedSum(const std::vector<Var>& terms, const std::vector<float>& w);

}  // namespace pwsc

#endif  // PWSC_OPS_H_
