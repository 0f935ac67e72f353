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

#include "pwsc/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pwsc/error.h"
#include "pwsc/simd.h"

namespace pwsc {
namespace {

void CheckPair(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    Fail(ErrorCode::kInvalidArgument, std::string(op) + ": shape mismatch " +
                                          ShapeString(a.shape()) + " vs " +
                                          ShapeString(b.shape()));
  }
}

// A single image plane in binary64.
struct Plane {
  int h = 0, w = 0;
  std::vector<double> v;
  double& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
};

std::vector<double> GaussianTaps() {
  std::vector<double> g(kSsimWindow);
  const int r = kSsimWindow / 2;
  double s = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - r;
    g[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    s += g[static_cast<size_t>(i)];
  }
  for (double& t : g) t /= s;
  return g;
}

// Valid-mode separable Gaussian filtering.
Plane Blur(const Plane& p, const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  Plane rows{p.h, p.w - k + 1, {}};
  rows.v.resize(static_cast<size_t>(rows.h) * rows.w);
  for (int y = 0; y < p.h; ++y) {
    for (int x = 0; x < rows.w; ++x) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += g[static_cast<size_t>(t)] * p.at(y, x + t);
      rows.at(y, x) = acc;
    }
  }
  Plane out{p.h - k + 1, rows.w, {}};
  out.v.assign(static_cast<size_t>(out.h) * out.w, 0.0);
  for (int t = 0; t < k; ++t) {
    for (int y = 0; y < out.h; ++y) {
      const double* src = &rows.v[static_cast<size_t>(y + t) * rows.w];
      double* dst = &out.v[static_cast<size_t>(y) * out.w];
      for (int x = 0; x < out.w; ++x) dst[x] += g[static_cast<size_t>(t)] * src[x];
    }
  }
  return out;
}

Plane Product(const Plane& a, const Plane& b) {
  Plane out{a.h, a.w, std::vector<double>(a.v.size())};
  for (size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

Plane Pool2(const Plane& p) {
  Plane out{p.h / 2, p.w / 2, {}};
  out.v.resize(static_cast<size_t>(out.h) * out.w);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      out.at(y, x) = 0.25 * (p.at(2 * y, 2 * x) + p.at(2 * y, 2 * x + 1) +
                             p.at(2 * y + 1, 2 * x) + p.at(2 * y + 1, 2 * x + 1));
    }
  }
  return out;
}

struct MeanSsim {
  double ssim = 0.0;
  double cs = 0.0;
};

MeanSsim MeanFactors(const Plane& x, const Plane& y, double range,
                        const std::vector<double>& g) {
  const Plane mx = Blur(x, g), my = Blur(y, g);
  const Plane xx = Blur(Product(x, x), g), yy = Blur(Product(y, y), g),
              xy = Blur(Product(x, y), g);
  double sum_cs = 0.0, sum_ssim = 0.0;
  for (size_t i = 0; i < mx.v.size(); ++i) {
    WindowStats s;
    s.mu_x = mx.v[i];
    s.mu_y = my.v[i];
    s.var_x = xx.v[i] - s.mu_x * s.mu_x;
    s.var_y = yy.v[i] - s.mu_y * s.mu_y;
    s.cov = xy.v[i] - s.mu_x * s.mu_y;
    const SsimFactors f = SsimWindow(s, range);
    sum_cs += f.cs;
    sum_ssim += f.ssim();
  }
  const double n = static_cast<double>(mx.v.size());
  return {sum_ssim / n, sum_cs / n};
}

std::vector<std::pair<Plane, Plane>> Planes(const Tensor& a, const Tensor& b) {
  PWSC_CHECK_ARG(a.rank() == 4, "ssim: expected N x C x H x W, got " + ShapeString(a.shape()));
  const int h = a.dim(2), w = a.dim(3);
  const size_t plane = static_cast<size_t>(h) * w;
  std::vector<std::pair<Plane, Plane>> out;
  for (int i = 0; i < a.dim(0) * a.dim(1); ++i) {
    Plane pa{h, w, std::vector<double>(a.ptr() + i * plane, a.ptr() + (i + 1) * plane)};
    Plane pb{h, w, std::vector<double>(b.ptr() + i * plane, b.ptr() + (i + 1) * plane)};
    out.emplace_back(std::move(pa), std::move(pb));
  }
  return out;
}

void CheckWindowFits(const Tensor& a, const char* op) {
  if (a.dim(2) < kSsimWindow || a.dim(3) < kSsimWindow) {
    Fail(ErrorCode::kInvalidArgument, std::string(op) + ": image " +
                                          std::to_string(a.dim(2)) + "x" +
                                          std::to_string(a.dim(3)) +
                                          " is smaller than the 11x11 window");
  }
}

}  // namespace

double Mse(const Tensor& a, const Tensor& b) {
  CheckPair(a, b, "mse");
  PWSC_CHECK_ARG(a.size() > 0, "mse: empty images");
  return simd::Active().sum_sq_diff(a.size(), a.ptr(), b.ptr()) /
         static_cast<double>(a.size());
}

double PsnrFromMse(double mse, double max_val) {
  PWSC_CHECK_ARG(max_val > 0.0, "psnr: max_val must be positive");
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val / mse);
}

double Psnr(const Tensor& a, const Tensor& b, double max_val) {
  return PsnrFromMse(Mse(a, b), max_val);
}

SsimFactors SsimWindow(const WindowStats& s, double dynamic_range, double k1, double k2) {
  const double c1 = (k1 * dynamic_range) * (k1 * dynamic_range);
  const double c2 = (k2 * dynamic_range) * (k2 * dynamic_range);
  SsimFactors f;
  f.luminance = (2.0 * s.mu_x * s.mu_y + c1) / (s.mu_x * s.mu_x + s.mu_y * s.mu_y + c1);
  f.cs = (2.0 * s.cov + c2) / (s.var_x + s.var_y + c2);
  return f;
}

double Ssim(const Tensor& a, const Tensor& b, double dynamic_range) {
  CheckPair(a, b, "ssim");
  CheckWindowFits(a, "ssim");
  const auto g = GaussianTaps();
  double total = 0.0;
  const auto planes = Planes(a, b);
  for (const auto& [pa, pb] : planes) total += MeanFactors(pa, pb, dynamic_range, g).ssim;
  return total / static_cast<double>(planes.size());
}

int MsSsimScales(int height, int width) {
  int dim = std::min(height, width);
  if (dim < kSsimWindow) return 0;
  int scales = 1;
  while (scales < kMsSsimScales && dim / 2 >= kSsimWindow) {
    dim /= 2;
    ++scales;
  }
  return scales;
}

double MsSsim(const Tensor& a, const Tensor& b, double dynamic_range) {
  CheckPair(a, b, "ms_ssim");
  CheckWindowFits(a, "ms_ssim");
  const int scales = MsSsimScales(a.dim(2), a.dim(3));
  double wsum = 0.0;
  for (int s = 0; s < scales; ++s) wsum += kMsSsimWeights[s];
  const auto g = GaussianTaps();

  double total = 0.0;
  auto planes = Planes(a, b);
  for (auto& [pa, pb] : planes) {
    double value = 1.0;
    for (int s = 0; s < scales; ++s) {
      if (s > 0) {
        pa = Pool2(pa);
        pb = Pool2(pb);
      }
      const MeanSsim f = MeanFactors(pa, pb, dynamic_range, g);
      // Coarsest scale uses full SSIM, finer ones contrast-structure only.
      const double term = (s == scales - 1) ? f.ssim : f.cs;
      value *= std::pow(std::max(term, 0.0), kMsSsimWeights[s] / wsum);
    }
    total += value;
  }
  return total / static_cast<double>(planes.size());
}

LpipsTerms LpipsFromFeatures(const std::vector<Tensor>& fa, const std::vector<Tensor>& fb,
                             const std::vector<double>& alphas) {
  PWSC_CHECK_ARG(fa.size() == fb.size() && fa.size() == alphas.size(),
                 "lpips: feature stack sizes differ");
  LpipsTerms out;
  for (size_t l = 0; l < fa.size(); ++l) {
    CheckPair(fa[l], fb[l], "lpips");
    const int n = fa[l].dim(0), c = fa[l].dim(1);
    const size_t plane = static_cast<size_t>(fa[l].dim(2)) * fa[l].dim(3);
    double acc = 0.0;
    for (int b = 0; b < n; ++b) {
      const float* xa = fa[l].ptr() + static_cast<size_t>(b) * c * plane;
      const float* xb = fb[l].ptr() + static_cast<size_t>(b) * c * plane;
      for (size_t p = 0; p < plane; ++p) {
        double na = 0.0, nb = 0.0;
        for (int ch = 0; ch < c; ++ch) {
          na += static_cast<double>(xa[ch * plane + p]) * xa[ch * plane + p];
          nb += static_cast<double>(xb[ch * plane + p]) * xb[ch * plane + p];
        }
        na = std::sqrt(na) + 1e-10;
        nb = std::sqrt(nb) + 1e-10;
        double d = 0.0;
        for (int ch = 0; ch < c; ++ch) {
          const double diff = xa[ch * plane + p] / na - xb[ch * plane + p] / nb;
          d += diff * diff;
        }
        acc += d;
      }
    }
    out.layer.push_back(acc / (static_cast<double>(n) * plane));
    out.value += alphas[l] * out.layer.back();
  }
  return out;
}

LpipsTerms LpipsDetailed(const Tensor& a, const Tensor& b, const FeatureExtractor& extractor) {
  CheckPair(a, b, "lpips");
  return LpipsFromFeatures(extractor.Extract(a), extractor.Extract(b), extractor.alphas());
}

double Lpips(const Tensor& a, const Tensor& b, const FeatureExtractor& extractor) {
  return LpipsDetailed(a, b, extractor).value;
}

QualityReport Evaluate(const Tensor& reference, const Tensor& reconstruction,
                       const FeatureExtractor& extractor, double bpp) {
  QualityReport r;
  r.mse = Mse(reference, reconstruction);
  r.psnr = PsnrFromMse(r.mse, 1.0);
  r.ms_ssim = MsSsim(reference, reconstruction);
  r.lpips = Lpips(reference, reconstruction, extractor);
  r.feature_l2 = FeatureL2(reference, reconstruction, extractor);
  r.bpp = bpp;
  return r;
}

}  // namespace pwsc
