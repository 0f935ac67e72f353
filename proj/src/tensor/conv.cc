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
#include <string>
#include <vector>

#include "im2col.h"
#include "pwsc/error.h"
#include "pwsc/ops.h"
#include "pwsc/simd.h"

namespace pwsc {
namespace {

using internal::Col2ImAdd;
using internal::Im2Col;
using internal::Transpose;

void CheckConvArgs(const Tensor& x, const Tensor& w, int stride, int pad,
                   const char* op) {
  const std::string name(op);
  if (x.rank() != 4 || w.rank() != 4) {
    Fail(ErrorCode::kInvalidArgument,
         name + ": expected rank-4 input and kernel, got " +
             ShapeString(x.shape()) + " and " + ShapeString(w.shape()));
  }
  if (w.dim(2) != w.dim(3)) {
    Fail(ErrorCode::kInvalidArgument,
         name + ": kernel must be square, got " + ShapeString(w.shape()));
  }
  PWSC_CHECK_ARG(stride >= 1, name + ": stride must be >= 1");
  PWSC_CHECK_ARG(pad >= 0, name + ": pad must be >= 0");
}

}  // namespace

int ConvOutputSize(int in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

int DeconvOutputSize(int in, int kernel, int stride, int pad,
                     int output_padding) {
  return (in - 1) * stride - 2 * pad + kernel + output_padding;
}

Var Conv2d(const Var& input, const Var& kernel, int stride, int pad) {
  const Tensor& x = input.value();
  const Tensor& w = kernel.value();
  CheckConvArgs(x, w, stride, pad, "conv2d");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int o = w.dim(0), k = w.dim(2);
  if (w.dim(1) != c) {
    Fail(ErrorCode::kInvalidArgument,
         "conv2d: input has " + std::to_string(c) + " channels but kernel " +
             ShapeString(w.shape()) + " expects " + std::to_string(w.dim(1)));
  }
  if (k > h + 2 * pad || k > wd + 2 * pad) {
    Fail(ErrorCode::kInvalidArgument,
         "conv2d: kernel " + std::to_string(k) + " exceeds padded input " +
             std::to_string(h + 2 * pad) + "x" + std::to_string(wd + 2 * pad));
  }
  const int oh = ConvOutputSize(h, k, stride, pad);
  const int ow = ConvOutputSize(wd, k, stride, pad);
  const int ckk = c * k * k;
  const int plane = oh * ow;
  const size_t in_stride = static_cast<size_t>(c) * h * wd;
  const size_t out_stride = static_cast<size_t>(o) * plane;

  const auto& simd = simd::Active();
  Tensor out({n, o, oh, ow}, 0.0f);
  std::vector<float> col(static_cast<size_t>(ckk) * plane);
  for (int b = 0; b < n; ++b) {
    Im2Col(x.ptr() + b * in_stride, c, h, wd, k, stride, pad, oh, ow,
           col.data());
    simd.gemm(o, plane, ckk, w.ptr(), ckk, col.data(), plane,
              out.ptr() + b * out_stride, plane);
  }
  CheckFinite(out, "conv2d");

  Tape* tape = input.tape();
  return tape->Record(
      std::move(out), {input, kernel},
      [=](Tape& t, int self) {
        const auto& simd = simd::Active();
        const Tensor& dout = t.Grad(self);
        const Tensor& xv = t.Value(input.id());
        const Tensor& wv = t.Value(kernel.id());
        std::vector<float> col(static_cast<size_t>(ckk) * plane);
        if (t.RequiresGrad(input.id())) {
          Tensor& dx = t.GradBuffer(input.id());
          std::vector<float> wt(static_cast<size_t>(ckk) * o);
          Transpose(wv.ptr(), o, ckk, wt.data());
          for (int b = 0; b < n; ++b) {
            std::fill(col.begin(), col.end(), 0.0f);
            simd.gemm(ckk, plane, o, wt.data(), o, dout.ptr() + b * out_stride,
                      plane, col.data(), plane);
            Col2ImAdd(col.data(), c, h, wd, k, stride, pad, oh, ow,
                      dx.ptr() + b * in_stride);
          }
        }
        if (t.RequiresGrad(kernel.id())) {
          Tensor& dw = t.GradBuffer(kernel.id());
          std::vector<float> colt(col.size());
          for (int b = 0; b < n; ++b) {
            Im2Col(xv.ptr() + b * in_stride, c, h, wd, k, stride, pad, oh, ow,
                   col.data());
            Transpose(col.data(), ckk, plane, colt.data());
            simd.gemm(o, ckk, plane, dout.ptr() + b * out_stride, plane,
                      colt.data(), ckk, dw.ptr(), ckk);
          }
        }
      });
}

Var Deconv2d(const Var& input, const Var& kernel, int stride, int pad,
             int output_padding) {
  const Tensor& x = input.value();
  const Tensor& w = kernel.value();
  CheckConvArgs(x, w, stride, pad, "deconv2d");
  const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int co = w.dim(1), k = w.dim(2);
  if (w.dim(0) != ci) {
    Fail(ErrorCode::kInvalidArgument,
         "deconv2d: input has " + std::to_string(ci) + " channels but kernel " +
             ShapeString(w.shape()) + " expects " + std::to_string(w.dim(0)));
  }
  PWSC_CHECK_ARG(output_padding >= 0 && output_padding < stride,
                 "deconv2d: output_padding must be in [0, stride)");
  const int oh = DeconvOutputSize(h, k, stride, pad, output_padding);
  const int ow = DeconvOutputSize(wd, k, stride, pad, output_padding);
  if (oh <= 0 || ow <= 0 || k > oh + 2 * pad || k > ow + 2 * pad) {
    Fail(ErrorCode::kInvalidArgument,
         "deconv2d: kernel " + std::to_string(k) + " with pad " +
             std::to_string(pad) + " does not fit output " +
             std::to_string(oh) + "x" + std::to_string(ow));
  }
  const int cokk = co * k * k;
  const int plane = h * wd;
  const size_t in_stride = static_cast<size_t>(ci) * plane;
  const size_t out_stride = static_cast<size_t>(co) * oh * ow;

  const auto& simd = simd::Active();
  Tensor out({n, co, oh, ow}, 0.0f);
  std::vector<float> wt(static_cast<size_t>(cokk) * ci);
  Transpose(w.ptr(), ci, cokk, wt.data());
  std::vector<float> col(static_cast<size_t>(cokk) * plane);
  for (int b = 0; b < n; ++b) {
    std::fill(col.begin(), col.end(), 0.0f);
    simd.gemm(cokk, plane, ci, wt.data(), ci, x.ptr() + b * in_stride, plane,
              col.data(), plane);
    Col2ImAdd(col.data(), co, oh, ow, k, stride, pad, h, wd,
              out.ptr() + b * out_stride);
  }
  CheckFinite(out, "deconv2d");

  Tape* tape = input.tape();
  return tape->Record(
      std::move(out), {input, kernel},
      [=](Tape& t, int self) {
        const auto& simd = simd::Active();
        const Tensor& dout = t.Grad(self);
        const Tensor& xv = t.Value(input.id());
        const Tensor& wv = t.Value(kernel.id());
        const bool need_dx = t.RequiresGrad(input.id());
        const bool need_dw = t.RequiresGrad(kernel.id());
        std::vector<float> col(static_cast<size_t>(cokk) * plane);
        std::vector<float> colt;
        if (need_dw) colt.resize(col.size());
        for (int b = 0; b < n; ++b) {
          Im2Col(dout.ptr() + b * out_stride, co, oh, ow, k, stride, pad, h,
                 wd, col.data());
          if (need_dx) {
            Tensor& dx = t.GradBuffer(input.id());
            simd.gemm(ci, plane, cokk, wv.ptr(), cokk, col.data(), plane,
                      dx.ptr() + b * in_stride, plane);
          }
          if (need_dw) {
            Tensor& dw = t.GradBuffer(kernel.id());
            Transpose(col.data(), cokk, plane, colt.data());
            simd.gemm(ci, cokk, plane, xv.ptr() + b * in_stride, plane,
                      colt.data(), cokk, dw.ptr(), cokk);
          }
        }
      });
}

}  // namespace pwsc
