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

#ifndef PWSC_REPORT_H_
#define PWSC_REPORT_H_

#include <optional>
#include <string>
#include <vector>

namespace pwsc {

inline constexpr int kRdCsvVersion = 1;
inline constexpr int kSweepCsvVersion = 1;

// One codec configuration averaged over a test set. bpp always comes from
// stream byte counts.
struct RdPoint {
  std::string codec;
  std::string config;  // lambda for learned models, quality for the block codec
  double bpp = 0.0;
  double psnr = 0.0;
  double ms_ssim = 0.0;
  double lpips = 0.0;
  int tiles = 0;
  // Imported rows keep their original field text: codec, config, bpp, psnr,
  // ms_ssim, lpips and, if present, tiles.
  std::vector<std::string> verbatim;
};

std::string RdCsvHeader();
std::string FormatRdCsv(const std::vector<RdPoint>& points);
// Accepts files with or without the version comment and the tiles column.
std::vector<RdPoint> ParseRdCsv(const std::string& text);

struct SweepRow {
  std::string kind;
  double level = 0.0;
  std::string metric;  // mse, one_minus_ms_ssim, lpips
  double mean = 0.0;
  double std = 0.0;    // population standard deviation
  int n = 0;
};

std::string FormatSweepCsv(const std::vector<SweepRow>& rows);

struct RdPlotOptions {
  std::optional<double> marker_bpp;
  std::string title;
};

// Three panels (psnr, ms_ssim, lpips against bpp), one polyline per codec in
// each panel.
std::string RdCurveSvg(const std::vector<RdPoint>& points, const RdPlotOptions& options = {});

std::string FormatNumber(double v);

}  // namespace pwsc

#endif  // PWSC_REPORT_H_
