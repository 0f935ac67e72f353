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

#include <algorithm>
#include <cmath>
#include <vector>

#include "pwsc/error.h"
#include "pwsc/ops.h"
#include "pwsc/simd.h"

namespace pwsc {

Var Gdn(const Var& input, const Var& beta, const Var& gamma, bool inverse) {
  const Tensor& x = input.value();
  PWSC_CHECK_ARG(x.rank() == 4, "gdn: input must be N x C x H x W, got " +
                                    ShapeString(x.shape()));
  const int n = x.dim(0), c = x.dim(1);
  const int plane = x.dim(2) * x.dim(3);
  PWSC_CHECK_ARG(beta.value().size() == static_cast<size_t>(c),
                 "gdn: beta must have one entry per channel");
  PWSC_CHECK_ARG(gamma.value().size() == static_cast<size_t>(c) * c,
                 "gdn: gamma must be C x C");

  // Clamp into the valid parameter domain, counting every adjustment.
  std::vector<float> b(beta.value().data().begin(), beta.value().data().end());
  std::vector<float> g(gamma.value().data().begin(),
                       gamma.value().data().end());
  int64_t clamps = 0;
  for (float& v : b) {
    if (!(v >= kGdnBetaMin)) {
      v = kGdnBetaMin;
      ++clamps;
    }
  }
  for (float& v : g) {
    if (!(v >= 0.0f)) {
      v = 0.0f;
      ++clamps;
    }
  }
  input.tape()->stats().gdn_clamp_events += clamps;

  const auto& simd = simd::Active();
  const size_t batch_stride = static_cast<size_t>(c) * plane;
  // denom[n][i][p] = beta_i + sum_j gamma_ij x_j^2
  std::vector<float> denom(x.size());
  std::vector<float> sq(batch_stride);
  for (int bi = 0; bi < n; ++bi) {
    const float* xb = x.ptr() + bi * batch_stride;
    for (size_t i = 0; i < batch_stride; ++i) sq[i] = xb[i] * xb[i];
    float* db = denom.data() + bi * batch_stride;
    for (int i = 0; i < c; ++i) {
      std::fill(db + static_cast<size_t>(i) * plane,
                db + static_cast<size_t>(i + 1) * plane, b[i]);
    }
    simd.gemm(c, plane, c, g.data(), c, sq.data(), plane, db, plane);
  }

  Tensor out(x.shape());
  for (size_t i = 0; i < x.size(); ++i) {
    const float r = std::sqrt(denom[i]);
    out[i] = inverse ? x[i] * r : x[i] / r;
  }
  CheckFinite(out, inverse ? "igdn" : "gdn");

  Tape* tape = input.tape();
  return tape->Record(
      std::move(out), {input, beta, gamma},
      [=, denom = std::move(denom), g = std::move(g)](Tape& t, int self) {
        const auto& simd = simd::Active();
        const Tensor& dy = t.Grad(self);
        const Tensor& xv = t.Value(input.id());
        // With y_i = x_i * D_i^e (e = -1/2 forward, +1/2 inverse):
        //   gi = dy_i * x_i * e * D_i^(e-1)
        //   dx_k = dy_k * D_k^e + 2 x_k sum_i gamma_ik gi
        //   dbeta_i = sum gi,  dgamma_ij = sum gi x_j^2
        std::vector<float> gi(xv.size());
        for (size_t i = 0; i < xv.size(); ++i) {
          const float d = denom[i];
          const float s = std::sqrt(d);
          gi[i] = inverse ? dy[i] * xv[i] * 0.5f / s
                          : dy[i] * xv[i] * -0.5f / (d * s);
        }
        const bool need_dx = t.RequiresGrad(input.id());
        const bool need_db = t.RequiresGrad(beta.id());
        const bool need_dg = t.RequiresGrad(gamma.id());
        std::vector<float> gt(static_cast<size_t>(c) * c);
        for (int i = 0; i < c; ++i) {
          for (int j = 0; j < c; ++j) gt[j * c + i] = g[i * c + j];
        }
        std::vector<float> tmp(batch_stride);
        std::vector<float> sq_t(batch_stride);
        for (int bi = 0; bi < n; ++bi) {
          const size_t off = bi * batch_stride;
          if (need_dx) {
            Tensor& dx = t.GradBuffer(input.id());
            std::fill(tmp.begin(), tmp.end(), 0.0f);
            simd.gemm(c, plane, c, gt.data(), c, gi.data() + off, plane,
                      tmp.data(), plane);
            for (size_t i = 0; i < batch_stride; ++i) {
              const float d = denom[off + i];
              const float r = inverse ? std::sqrt(d) : 1.0f / std::sqrt(d);
              dx[off + i] += dy[off + i] * r + 2.0f * xv[off + i] * tmp[i];
            }
          }
          if (need_db) {
            Tensor& db = t.GradBuffer(beta.id());
            for (int i = 0; i < c; ++i) {
              double s = 0.0;
              const float* row = gi.data() + off + static_cast<size_t>(i) * plane;
              for (int p = 0; p < plane; ++p) s += row[p];
              db[i] += static_cast<float>(s);
            }
          }
          if (need_dg) {
            Tensor& dg = t.GradBuffer(gamma.id());
            for (int j = 0; j < c; ++j) {
              const float* xr = xv.ptr() + off + static_cast<size_t>(j) * plane;
              float* sr = sq_t.data() + static_cast<size_t>(j) * plane;
              for (int p = 0; p < plane; ++p) sr[p] = xr[p] * xr[p];
            }
            for (int i = 0; i < c; ++i) {
              const float* gr = gi.data() + off + static_cast<size_t>(i) * plane;
              for (int j = 0; j < c; ++j) {
                dg[i * c + j] += static_cast<float>(simd.dot(
                    plane, gr, sq_t.data() + static_cast<size_t>(j) * plane));
              }
            }
          }
        }
      });
}

}  // namespace pwsc
