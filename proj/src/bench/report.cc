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

#include "pwsc/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "pwsc/error.h"

namespace pwsc {
namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c == '"') {
      Fail(ErrorCode::kDataError, "quoted csv fields are not supported: " + line);
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

double ParseDouble(const std::string& s, const std::string& what) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  Fail(ErrorCode::kDataError, "bad number for " + what + ": '" + s + "'");
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string Px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Roughly five round tick values covering [lo, hi].
std::vector<double> Ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) {
    out.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
  }
  return out;
}

std::string TickLabel(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void Add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void Pad() {
    if (!std::isfinite(lo)) lo = 0, hi = 1;
    double pad = 0.05 * (hi - lo);
    if (pad == 0.0) pad = std::max(std::abs(lo) * 0.05, 1e-3);
    lo -= pad;
    hi += pad;
  }
};

const char* const kPalette[] = {"#1f77b4", "#2ca02c", "#ff7f0e", "#555555",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string FormatNumber(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string RdCsvHeader() { return "codec,config,bpp,psnr,ms_ssim,lpips,tiles"; }

std::string FormatRdCsv(const std::vector<RdPoint>& points) {
  std::ostringstream out;
  out << "# pwsc rd-curve v" << kRdCsvVersion << "\n" << RdCsvHeader() << "\n";
  for (const auto& p : points) {
    if (!p.verbatim.empty()) {
      for (size_t i = 0; i < 7; ++i) {
        if (i) out << ",";
        if (i < p.verbatim.size()) out << p.verbatim[i];
      }
    } else {
      out << p.codec << "," << p.config << "," << FormatNumber(p.bpp) << ","
          << FormatNumber(p.psnr) << "," << FormatNumber(p.ms_ssim) << ","
          << FormatNumber(p.lpips) << "," << p.tiles;
    }
    out << "\n";
  }
  return out.str();
}

std::vector<RdPoint> ParseRdCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  std::vector<RdPoint> out;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    auto fields = SplitCsvLine(line);
    if (header.empty()) {
      header = fields;
      const std::vector<std::string> base = {"codec", "config", "bpp", "psnr", "ms_ssim", "lpips"};
      if (header.size() < 6 || header.size() > 7 ||
          !std::equal(base.begin(), base.end(), header.begin()) ||
          (header.size() == 7 && header[6] != "tiles")) {
        Fail(ErrorCode::kDataError, "csv header must be " + RdCsvHeader() + " (tiles optional)");
      }
      continue;
    }
    const std::string where = "csv line " + std::to_string(line_no);
    if (fields.size() != header.size()) Fail(ErrorCode::kDataError, where + ": wrong field count");
    RdPoint p;
    p.codec = fields[0];
    p.config = fields[1];
    if (p.codec.empty()) Fail(ErrorCode::kDataError, where + ": empty codec");
    p.bpp = ParseDouble(fields[2], where + " bpp");
    p.psnr = ParseDouble(fields[3], where + " psnr");
    p.ms_ssim = ParseDouble(fields[4], where + " ms_ssim");
    p.lpips = ParseDouble(fields[5], where + " lpips");
    if (fields.size() == 7 && !fields[6].empty()) {
      p.tiles = static_cast<int>(ParseDouble(fields[6], where + " tiles"));
    }
    p.verbatim = fields;
    out.push_back(std::move(p));
  }
  if (header.empty()) Fail(ErrorCode::kDataError, "csv has no header");
  return out;
}

std::string FormatSweepCsv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "# pwsc sweep v" << kSweepCsvVersion << "\nkind,level,metric,mean,std,n\n";
  for (const auto& r : rows) {
    out << r.kind << "," << TickLabel(r.level) << "," << r.metric << ","
        << FormatNumber(r.mean) << "," << FormatNumber(r.std) << "," << r.n << "\n";
  }
  return out.str();
}

std::string RdCurveSvg(const std::vector<RdPoint>& points, const RdPlotOptions& options) {
  struct Panel {
    const char* title;
    double RdPoint::*field;
  };
  const Panel panels[] = {{"PSNR [dB] ↑", &RdPoint::psnr},
                          {"MS-SSIM ↑", &RdPoint::ms_ssim},
                          {"LPIPS ↓", &RdPoint::lpips}};
  const double pw = 360, ph = 300, ml = 60, mr = 16, mt = 40, mb = 48;

  std::vector<std::string> codecs;
  std::map<std::string, std::vector<const RdPoint*>> by_codec;
  Range xr;
  for (const auto& p : points) {
    if (!by_codec.count(p.codec)) codecs.push_back(p.codec);
    by_codec[p.codec].push_back(&p);
    xr.Add(p.bpp);
  }
  for (auto& [name, list] : by_codec) {
    std::stable_sort(list.begin(), list.end(),
                     [](const RdPoint* a, const RdPoint* b) { return a->bpp < b->bpp; });
  }
  if (options.marker_bpp) xr.Add(*options.marker_bpp);
  xr.Pad();

  const double legend_h = 22.0 * static_cast<double>(codecs.size()) + 10;
  const double top = options.title.empty() ? 0 : 28;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Px(3 * pw) << "\" height=\""
      << Px(top + ph + legend_h) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!options.title.empty()) {
    svg << "<text x=\"" << Px(1.5 * pw) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
        << Escape(options.title) << "</text>\n";
  }

  for (int k = 0; k < 3; ++k) {
    const Panel& panel = panels[k];
    Range yr;
    for (const auto& p : points) yr.Add(p.*panel.field);
    yr.Pad();
    const double x0 = k * pw + ml, x1 = (k + 1) * pw - mr;
    const double y0 = top + ph - mb, y1 = top + mt;
    auto sx = [&](double v) { return x0 + (v - xr.lo) / (xr.hi - xr.lo) * (x1 - x0); };
    auto sy = [&](double v) { return y0 - (v - yr.lo) / (yr.hi - yr.lo) * (y0 - y1); };

    svg << "<g class=\"panel\" id=\"panel-" << k << "\">\n";
    svg << "<text x=\"" << Px((x0 + x1) / 2) << "\" y=\"" << Px(top + 22)
        << "\" text-anchor=\"middle\" font-size=\"14\">" << panel.title << "</text>\n";
    svg << "<rect x=\"" << Px(x0) << "\" y=\"" << Px(y1) << "\" width=\"" << Px(x1 - x0)
        << "\" height=\"" << Px(y0 - y1) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (double t : Ticks(xr.lo, xr.hi)) {
      svg << "<line x1=\"" << Px(sx(t)) << "\" y1=\"" << Px(y0) << "\" x2=\"" << Px(sx(t))
          << "\" y2=\"" << Px(y0 + 4) << "\" stroke=\"#444\"/>"
          << "<text x=\"" << Px(sx(t)) << "\" y=\"" << Px(y0 + 17)
          << "\" text-anchor=\"middle\">" << TickLabel(t) << "</text>\n";
    }
    for (double t : Ticks(yr.lo, yr.hi)) {
      svg << "<line x1=\"" << Px(x0 - 4) << "\" y1=\"" << Px(sy(t)) << "\" x2=\"" << Px(x0)
          << "\" y2=\"" << Px(sy(t)) << "\" stroke=\"#444\"/>"
          << "<text x=\"" << Px(x0 - 7) << "\" y=\"" << Px(sy(t) + 4)
          << "\" text-anchor=\"end\">" << TickLabel(t) << "</text>\n";
    }
    svg << "<text x=\"" << Px((x0 + x1) / 2) << "\" y=\"" << Px(y0 + 36)
        << "\" text-anchor=\"middle\">bpp</text>\n";

    for (size_t c = 0; c < codecs.size(); ++c) {
      const char* color = kPalette[c % std::size(kPalette)];
      std::ostringstream pts;
      for (const RdPoint* p : by_codec[codecs[c]]) {
        const double v = p->*panel.field;
        if (!std::isfinite(v)) continue;
        pts << (pts.tellp() > 0 ? " " : "") << Px(sx(p->bpp)) << "," << Px(sy(v));
      }
      svg << "<polyline class=\"codec\" data-codec=\"" << Escape(codecs[c]) << "\" points=\""
          << pts.str() << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\"/>\n";
      for (const RdPoint* p : by_codec[codecs[c]]) {
        const double v = p->*panel.field;
        if (!std::isfinite(v)) continue;
        svg << "<circle cx=\"" << Px(sx(p->bpp)) << "\" cy=\"" << Px(sy(v))
            << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
      }
    }

    if (options.marker_bpp) {
      const double m = *options.marker_bpp;
      double my = yr.lo;
      bool on_curve = false;
      for (const auto& name : codecs) {
        const auto& list = by_codec[name];
        for (size_t i = 1; i < list.size() && !on_curve; ++i) {
          const RdPoint& a = *list[i - 1];
          const RdPoint& b = *list[i];
          if (a.bpp <= m && m <= b.bpp && b.bpp > a.bpp) {
            const double t = (m - a.bpp) / (b.bpp - a.bpp);
            my = a.*panel.field + t * (b.*panel.field - a.*panel.field);
            on_curve = std::isfinite(my);
          }
        }
        if (on_curve) break;
      }
      if (!on_curve) my = yr.lo;
      svg << "<line x1=\"" << Px(sx(m)) << "\" y1=\"" << Px(y0) << "\" x2=\"" << Px(sx(m))
          << "\" y2=\"" << Px(y1) << "\" stroke=\"red\" stroke-dasharray=\"3,3\"/>"
          << "<circle class=\"marker\" cx=\"" << Px(sx(m)) << "\" cy=\"" << Px(sy(my))
          << "\" r=\"4.5\" fill=\"red\"/>\n";
    }
    svg << "</g>\n";
  }

  for (size_t c = 0; c < codecs.size(); ++c) {
    const double y = top + ph + 14 + 22.0 * static_cast<double>(c);
    svg << "<line x1=\"" << Px(ml) << "\" y1=\"" << Px(y) << "\" x2=\"" << Px(ml + 28)
        << "\" y2=\"" << Px(y) << "\" stroke=\"" << kPalette[c % std::size(kPalette)]
        << "\" stroke-width=\"2\"/><text x=\"" << Px(ml + 36) << "\" y=\"" << Px(y + 4) << "\">"
        << Escape(codecs[c]) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace pwsc
