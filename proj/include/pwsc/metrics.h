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

#ifndef PWSC_METRICS_H_
#define PWSC_METRICS_H_

#include <vector>

#include "pwsc/feature_extractor.h"
#include "pwsc/tensor.h"

namespace pwsc {

inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr int kMsSsimScales = 5;
inline constexpr double kMsSsimWeights[kMsSsimScales] = {0.0448, 0.2856, 0.3001,
                                                         0.2363, 0.1333};

// Mean over all elements of the squared difference.
double Mse(const Tensor& a, const Tensor& b);
// 10 log10(max_val^2 / mse); +infinity when mse == 0.
double PsnrFromMse(double mse, double max_val);
double Psnr(const Tensor& a, const Tensor& b, double max_val);

// Local statistics of a window pair.
struct WindowStats {
  double mu_x = 0.0;
  double mu_y = 0.0;
  double var_x = 0.0;
  double var_y = 0.0;
  double cov = 0.0;
};

// Luminance and contrast-structure factors of one window; their product is
// the SSIM value.
struct SsimFactors {
  double luminance = 1.0;
  double cs = 1.0;
  double ssim() const { return luminance * cs; }
};

SsimFactors SsimWindow(const WindowStats& s, double dynamic_range = 1.0,
                       double k1 = kSsimK1, double k2 = kSsimK2);

// Mean single-scale SSIM over all valid 11x11 Gaussian windows, averaged over
// images and channels.
double Ssim(const Tensor& a, const Tensor& b, double dynamic_range = 1.0);

// Five scales with 2x2 average pooling between them. Scales whose extent would
// fall below one window are dropped and the remaining weights renormalized.
double MsSsim(const Tensor& a, const Tensor& b, double dynamic_range = 1.0);
int MsSsimScales(int height, int width);

struct LpipsTerms {
  std::vector<double> layer;  // per stage, before weighting
  double value = 0.0;         // sum_l alpha_l * layer[l]
};

// Per position, feature vectors are divided by their channel norm (+1e-10);
// the squared difference is averaged over positions.
LpipsTerms LpipsFromFeatures(const std::vector<Tensor>& fa,
                             const std::vector<Tensor>& fb,
                             const std::vector<double>& alphas);
LpipsTerms LpipsDetailed(const Tensor& a, const Tensor& b,
                         const FeatureExtractor& extractor);
double Lpips(const Tensor& a, const Tensor& b, const FeatureExtractor& extractor);

struct QualityReport {
  double mse = 0.0;  // on [0, 1] intensities
  double psnr = 0.0;
  double ms_ssim = 0.0;
  double lpips = 0.0;
  double feature_l2 = 0.0;
  double bpp = 0.0;
};

// `reference` and `reconstruction` in [0, 1]; psnr uses max_val = 1.
QualityReport Evaluate(const Tensor& reference, const Tensor& reconstruction,
                       const FeatureExtractor& extractor, double bpp);

}  // namespace pwsc

#endif  // PWSC_METRICS_H_
