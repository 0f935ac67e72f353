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

#ifndef PWSC_TESTS_TEST_UTIL_H_
#define PWSC_TESTS_TEST_UTIL_H_

// Test-only oracles: direct-loop binary64 reference implementations and
// finite-difference helpers. Nothing here calls into the code under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "pwsc/feature_extractor.h"
#include "pwsc/rng.h"
#include "pwsc/tensor.h"

namespace pwsc::testing {

inline Tensor RandomTensor(const Shape& shape, Rng& rng, double lo = -1.0,
                           double hi = 1.0) {
  Tensor t(shape);
  for (float& v : t.data()) v = static_cast<float>(rng.Uniform(lo, hi));
  return t;
}

inline std::vector<double> ToDouble(const Tensor& t) {
  return std::vector<double>(t.data().begin(), t.data().end());
}

// ||a - b|| / max(||b||, floor)
inline double RelErr(std::span<const double> a, std::span<const double> b,
                     double floor = 1e-12) {
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), floor);
}

inline double RelErr(const Tensor& a, std::span<const double> b) {
  const auto ad = ToDouble(a);
  return RelErr(ad, b);
}

// Six nested loops, zero padding.
inline std::vector<double> ConvReference(const std::vector<double>& x,
                                         const Shape& xs,
                                         const std::vector<double>& w,
                                         const Shape& ws, int stride, int pad) {
  const int n = xs[0], c = xs[1], h = xs[2], wd = xs[3];
  const int o = ws[0], k = ws[2];
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (wd + 2 * pad - k) / stride + 1;
  std::vector<double> out(static_cast<size_t>(n) * o * oh * ow, 0.0);
  for (int b = 0; b < n; ++b)
    for (int oc = 0; oc < o; ++oc)
      for (int y = 0; y < oh; ++y)
        for (int xo = 0; xo < ow; ++xo) {
          double acc = 0.0;
          for (int ic = 0; ic < c; ++ic)
            for (int ki = 0; ki < k; ++ki)
              for (int kj = 0; kj < k; ++kj) {
                const int iy = y * stride - pad + ki;
                const int ix = xo * stride - pad + kj;
                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                acc += x[((static_cast<size_t>(b) * c + ic) * h + iy) * wd + ix] *
                       w[((static_cast<size_t>(oc) * c + ic) * k + ki) * k + kj];
              }
          out[((static_cast<size_t>(b) * o + oc) * oh + y) * ow + xo] = acc;
        }
  return out;
}

// Transposed convolution by direct scatter: every input sample stamps the
// kernel onto the output grid.
inline std::vector<double> DeconvReference(const std::vector<double>& x,
                                           const Shape& xs,
                                           const std::vector<double>& w,
                                           const Shape& ws, int stride, int pad,
                                           int output_padding) {
  const int n = xs[0], ci = xs[1], h = xs[2], wd = xs[3];
  const int co = ws[1], k = ws[2];
  const int oh = (h - 1) * stride - 2 * pad + k + output_padding;
  const int ow = (wd - 1) * stride - 2 * pad + k + output_padding;
  std::vector<double> out(static_cast<size_t>(n) * co * oh * ow, 0.0);
  for (int b = 0; b < n; ++b)
    for (int ic = 0; ic < ci; ++ic)
      for (int y = 0; y < h; ++y)
        for (int xi = 0; xi < wd; ++xi) {
          const double v = x[((static_cast<size_t>(b) * ci + ic) * h + y) * wd + xi];
          for (int oc = 0; oc < co; ++oc)
            for (int ki = 0; ki < k; ++ki)
              for (int kj = 0; kj < k; ++kj) {
                const int oy = y * stride - pad + ki;
                const int ox = xi * stride - pad + kj;
                if (oy < 0 || oy >= oh || ox < 0 || ox >= ow) continue;
                out[((static_cast<size_t>(b) * co + oc) * oh + oy) * ow + ox] +=
                    v * w[((static_cast<size_t>(ic) * co + oc) * k + ki) * k + kj];
              }
        }
  return out;
}

inline std::vector<double> GdnReference(const std::vector<double>& x,
                                        const Shape& xs,
                                        const std::vector<double>& beta,
                                        const std::vector<double>& gamma,
                                        bool inverse) {
  const int n = xs[0], c = xs[1];
  const size_t plane = static_cast<size_t>(xs[2]) * xs[3];
  std::vector<double> out(x.size());
  for (int b = 0; b < n; ++b)
    for (size_t p = 0; p < plane; ++p)
      for (int i = 0; i < c; ++i) {
        double d = beta[i];
        for (int j = 0; j < c; ++j) {
          const double xj = x[(static_cast<size_t>(b) * c + j) * plane + p];
          d += gamma[static_cast<size_t>(i) * c + j] * xj * xj;
        }
        const size_t idx = (static_cast<size_t>(b) * c + i) * plane + p;
        out[idx] = inverse ? x[idx] * std::sqrt(d) : x[idx] / std::sqrt(d);
      }
  return out;
}

// Central differences of a scalar function of `x`.
inline std::vector<double> NumericGradient(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double fp = f(x);
    x[i] = saved - h;
    const double fm = f(x);
    x[i] = saved;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double Dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Pooled final-stage features through the six-loop convolution, binary64.
inline std::vector<double> PooledFeaturesOracle(std::vector<double> x, Shape shape,
                                         const FeatureExtractor& fx) {
  for (double& v : x) v = 2.0 * v - 1.0;
  const auto ws = fx.ToWeights();
  for (int l = 0; l < fx.stages(); ++l) {
    const Tensor& w = ws[2 * l].tensor;
    const Tensor& bias = ws[2 * l + 1].tensor;
    x = ConvReference(x, shape, ToDouble(w), w.shape(), 2, 1);
    shape = {shape[0], w.dim(0), (shape[2] - 1) / 2 + 1, (shape[3] - 1) / 2 + 1};
    const size_t plane = static_cast<size_t>(shape[2]) * shape[3];
    for (size_t i = 0; i < x.size(); ++i) x[i] = std::max(0.0, x[i] + bias[(i / plane) % shape[1]]);
  }
  const size_t plane = static_cast<size_t>(shape[2]) * shape[3];
  std::vector<double> pooled(static_cast<size_t>(shape[1]), 0.0);
  for (size_t i = 0; i < x.size(); ++i) pooled[i / plane] += x[i] / plane;
  return pooled;
}

inline double FeatureL2Oracle(const std::vector<double>& a, const std::vector<double>& b,
                       const Shape& shape, const FeatureExtractor& fx) {
  const auto pa = PooledFeaturesOracle(a, shape, fx), pb = PooledFeaturesOracle(b, shape, fx);
  double s = 0.0;
  for (size_t i = 0; i < pa.size(); ++i) s += (pa[i] - pb[i]) * (pa[i] - pb[i]);
  return std::sqrt(s);
}

// -sum log2 max(p_min, bin mass) of a logistic prior per channel; N x C x H x W
// latent flattened.
inline double RateBitsReference(const std::vector<double>& y, const Shape& ys,
                                const std::vector<double>& loc,
                                const std::vector<double>& log_scale, double p_min) {
  const size_t plane = static_cast<size_t>(ys[2]) * ys[3];
  auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  double bits = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    const size_t c = (i / plane) % static_cast<size_t>(ys[1]);
    const double s = std::exp(log_scale[c]);
    const double p = sigmoid((y[i] + 0.5 - loc[c]) / s) - sigmoid((y[i] - 0.5 - loc[c]) / s);
    bits -= std::log2(std::max(p, p_min));
  }
  return bits;
}

}  // namespace pwsc::testing

#endif  // PWSC_TESTS_TEST_UTIL_H_
