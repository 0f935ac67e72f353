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

#include "pwsc/dataset.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include "json.hpp"
#include "pwsc/error.h"
#include "pwsc/hash.h"
#include "pwsc/image_io.h"
#include "pwsc/rng.h"

namespace pwsc {
namespace {

using nlohmann::json;

std::vector<json> ReadJsonLines(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kDataError, "cannot open manifest " + path);
  std::vector<json> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      Fail(ErrorCode::kDataError,
           path + ":" + std::to_string(lineno) + ": malformed record (" + e.what() + ")");
    }
  }
  return out;
}

void WriteJsonLines(const std::string& path, const std::vector<json>& records) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kDataError, "cannot write manifest " + path);
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) Fail(ErrorCode::kDataError, "short write to " + path);
}

template <typename T>
T Field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) Fail(ErrorCode::kDataError, where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    Fail(ErrorCode::kDataError, where + ": field '" + key + "' has the wrong type");
  }
}

// Seeded ordering key of a slide id.
uint64_t SlideKey(const std::string& id, uint64_t seed) {
  std::string buf(8, '\0');
  for (int i = 0; i < 8; ++i) buf[static_cast<size_t>(i)] = static_cast<char>(seed >> (8 * i));
  return Fnv1a64(buf + id);
}

std::pair<std::set<std::string>, std::set<std::string>> PartitionIds(
    std::vector<std::string> ids, double test_fraction, uint64_t seed) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < 2) {
    Fail(ErrorCode::kInvalidArgument,
         "split: need at least 2 slides, got " + std::to_string(ids.size()));
  }
  PWSC_CHECK_ARG(test_fraction > 0.0 && test_fraction < 1.0,
                 "split: test fraction must lie in (0, 1)");
  std::stable_sort(ids.begin(), ids.end(), [seed](const std::string& a, const std::string& b) {
    return SlideKey(a, seed) < SlideKey(b, seed);
  });
  const long n = static_cast<long>(ids.size());
  const long n_test = std::clamp(std::lround(test_fraction * static_cast<double>(n)), 1L, n - 1);
  std::set<std::string> test(ids.begin(), ids.begin() + n_test);
  std::set<std::string> train(ids.begin() + n_test, ids.end());
  return {train, test};
}

// Smoothly interpolated lattice noise in [0, 1].
class ValueNoise {
 public:
  ValueNoise(int height, int width, double cell, Rng& rng)
      : cell_(cell),
        gw_(static_cast<int>(width / cell) + 2),
        gh_(static_cast<int>(height / cell) + 2),
        grid_(static_cast<size_t>(gw_) * gh_) {
    for (double& v : grid_) v = rng.Uniform();
  }

  double At(double y, double x) const {
    const double fy = y / cell_, fx = x / cell_;
    const int iy = std::min(static_cast<int>(fy), gh_ - 2), ix = std::min(static_cast<int>(fx), gw_ - 2);
    const double ty = Smooth(fy - iy), tx = Smooth(fx - ix);
    auto g = [&](int yy, int xx) { return grid_[static_cast<size_t>(yy) * gw_ + xx]; };
    const double top = g(iy, ix) * (1 - tx) + g(iy, ix + 1) * tx;
    const double bot = g(iy + 1, ix) * (1 - tx) + g(iy + 1, ix + 1) * tx;
    return top * (1 - ty) + bot * ty;
  }

 private:
  static double Smooth(double t) { return t * t * (3 - 2 * t); }
  double cell_;
  int gw_, gh_;
  std::vector<double> grid_;
};

double SmoothStep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3 - 2 * t);
}

}  // namespace

std::vector<TileRect> TileGrid(int height, int width, int tile_size, int stride) {
  PWSC_CHECK_ARG(tile_size > 0 && stride > 0, "tile: size and stride must be positive");
  PWSC_CHECK_ARG(tile_size <= std::min(height, width),
                 "tile: tile size " + std::to_string(tile_size) + " exceeds image " +
                     std::to_string(height) + "x" + std::to_string(width));
  std::vector<TileRect> out;
  for (int y = 0; y + tile_size <= height; y += stride)
    for (int x = 0; x + tile_size <= width; x += stride) out.push_back({x, y, tile_size});
  return out;
}

Tensor CropTile(const Tensor& image, const TileRect& r) {
  PWSC_CHECK_ARG(image.rank() == 4 && r.x >= 0 && r.y >= 0 && r.y + r.size <= image.dim(2) &&
                     r.x + r.size <= image.dim(3),
                 "tile: rectangle outside the image");
  const int n = image.dim(0), c = image.dim(1);
  Tensor out({n, c, r.size, r.size});
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < r.size; ++y) {
        const float* src = image.ptr() +
                           ((static_cast<size_t>(b) * c + ch) * image.dim(2) + r.y + y) * image.dim(3) + r.x;
        std::copy(src, src + r.size, &out.at(b, ch, y, 0));
      }
  return out;
}

std::vector<Tensor> TileImage(const Tensor& image, int tile_size, int stride) {
  std::vector<Tensor> out;
  for (const TileRect& r : TileGrid(image.dim(2), image.dim(3), tile_size, stride)) {
    out.push_back(CropTile(image, r));
  }
  return out;
}

SplitResult SplitSlides(const std::vector<SlideRecord>& records, double test_fraction,
                        uint64_t seed) {
  std::vector<TileRef> tiles;
  std::vector<std::string> ids;
  for (const auto& rec : records) {
    ids.push_back(rec.slide_id);
    for (const TileRect& r : rec.tiles) tiles.push_back({rec.slide_id, rec.path, "", r});
  }
  auto [train_ids, test_ids] = PartitionIds(ids, test_fraction, seed);
  SplitResult out;
  out.train.split = "train";
  out.test.split = "test";
  out.train.slide_ids.assign(train_ids.begin(), train_ids.end());
  out.test.slide_ids.assign(test_ids.begin(), test_ids.end());
  for (const TileRef& t : tiles) (test_ids.count(t.slide_id) ? out.test : out.train).tiles.push_back(t);
  return out;
}

SplitResult SplitTiles(const std::vector<TileRef>& tiles, double test_fraction, uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& t : tiles) ids.push_back(t.slide_id);
  auto [train_ids, test_ids] = PartitionIds(ids, test_fraction, seed);
  SplitResult out;
  out.train.split = "train";
  out.test.split = "test";
  out.train.slide_ids.assign(train_ids.begin(), train_ids.end());
  out.test.slide_ids.assign(test_ids.begin(), test_ids.end());
  for (const TileRef& t : tiles) (test_ids.count(t.slide_id) ? out.test : out.train).tiles.push_back(t);
  return out;
}

void CheckNoLeakage(const std::vector<std::string>& train_slides,
                    const std::vector<std::string>& test_slides) {
  const std::set<std::string> train(train_slides.begin(), train_slides.end());
  for (const auto& id : test_slides) {
    if (train.count(id)) {
      Fail(ErrorCode::kDataError, "split leakage: slide '" + id + "' is in both train and test");
    }
  }
}

std::vector<SlideRecord> ReadCorpusManifest(const std::string& path) {
  std::vector<SlideRecord> out;
  int i = 0;
  for (const json& j : ReadJsonLines(path)) {
    const std::string where = path + " record " + std::to_string(++i);
    SlideRecord r;
    r.slide_id = Field<std::string>(j, "slide_id", where);
    r.path = Field<std::string>(j, "path", where);
    r.height = j.value("height", 0);
    r.width = j.value("width", 0);
    out.push_back(std::move(r));
  }
  return out;
}

void WriteCorpusManifest(const std::string& path, const std::vector<SlideRecord>& records) {
  std::vector<json> lines;
  for (const auto& r : records) {
    lines.push_back({{"slide_id", r.slide_id}, {"path", r.path}, {"height", r.height}, {"width", r.width}});
  }
  WriteJsonLines(path, lines);
}

std::vector<TileRef> ReadTileManifest(const std::string& path) {
  std::vector<TileRef> out;
  int i = 0;
  for (const json& j : ReadJsonLines(path)) {
    const std::string where = path + " record " + std::to_string(++i);
    TileRef t;
    t.slide_id = Field<std::string>(j, "slide_id", where);
    t.source = j.value("source", std::string());
    t.path = j.value("path", std::string());
    t.rect.x = Field<int>(j, "x", where);
    t.rect.y = Field<int>(j, "y", where);
    t.rect.size = Field<int>(j, "size", where);
    if (t.path.empty() && t.source.empty()) {
      Fail(ErrorCode::kDataError, where + ": needs a tile path or a source image");
    }
    out.push_back(std::move(t));
  }
  return out;
}

void WriteTileManifest(const std::string& path, const std::vector<TileRef>& tiles,
                       const std::string& split) {
  std::vector<json> lines;
  for (const auto& t : tiles) {
    json j = {{"slide_id", t.slide_id}, {"source", t.source}, {"path", t.path},
              {"x", t.rect.x},          {"y", t.rect.y},      {"size", t.rect.size}};
    if (!split.empty()) j["split"] = split;
    lines.push_back(std::move(j));
  }
  WriteJsonLines(path, lines);
}

Tensor LoadTile(const TileRef& tile, const std::string& base_dir) {
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return (fp.is_relative() && !base_dir.empty()) ? (std::filesystem::path(base_dir) / fp).string() : p;
  };
  if (!tile.path.empty()) {
    Tensor t = LoadImage(resolve(tile.path));
    if (t.dim(2) != tile.rect.size || t.dim(3) != tile.rect.size) {
      Fail(ErrorCode::kDataError, tile.path + ": tile is not " + std::to_string(tile.rect.size) +
                                      "x" + std::to_string(tile.rect.size));
    }
    return t;
  }
  const Tensor src = LoadImage(resolve(tile.source));
  if (tile.rect.y + tile.rect.size > src.dim(2) || tile.rect.x + tile.rect.size > src.dim(3)) {
    Fail(ErrorCode::kDataError, tile.source + ": tile rectangle outside the image");
  }
  return CropTile(src, tile.rect);
}

Tensor SynthesizeTissue(int height, int width, uint64_t seed) {
  PWSC_CHECK_ARG(height > 0 && width > 0, "synth: empty image");
  Rng rng(seed);
  const ValueNoise density(height, width, 40.0, rng), detail(height, width, 9.0, rng),
      angle(height, width, 70.0, rng), warp(height, width, 16.0, rng),
      chroma(height, width, 5.0, rng);

  const size_t n = static_cast<size_t>(height) * width;
  std::vector<double> r(n), g(n), b(n), lumen(n, 0.0);

  // Lumens: noisy discs.
  const int n_lumen = 1 + static_cast<int>(rng.Below(static_cast<uint64_t>(1 + n / 40000)));
  for (int k = 0; k < n_lumen; ++k) {
    const double cy = rng.Uniform(0, height), cx = rng.Uniform(0, width);
    const double rad = rng.Uniform(12, 40);
    const int y0 = std::max(0, static_cast<int>(cy - 1.6 * rad)), y1 = std::min(height, static_cast<int>(cy + 1.6 * rad));
    const int x0 = std::max(0, static_cast<int>(cx - 1.6 * rad)), x1 = std::min(width, static_cast<int>(cx + 1.6 * rad));
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        const double d = std::hypot(y - cy, x - cx) / rad + 0.5 * (warp.At(y, x) - 0.5);
        double& l = lumen[static_cast<size_t>(y) * width + x];
        l = std::max(l, 1.0 - SmoothStep(0.8, 1.0, d));
      }
  }

  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const size_t i = static_cast<size_t>(y) * width + x;
      const double s = std::clamp(0.75 * density.At(y, x) + 0.35 * detail.At(y, x) - 0.05, 0.0, 1.0);
      const double th = angle.At(y, x) * 2.0 * std::numbers::pi;
      const double fiber = 0.5 + 0.5 * std::sin(0.45 * (x * std::cos(th) + y * std::sin(th)) + 6.0 * warp.At(y, x));
      const double t = s * (0.65 + 0.35 * fiber);
      double rr = 0.95 + (0.84 - 0.95) * t;
      double gg = 0.80 + (0.46 - 0.80) * t;
      double bb = 0.88 + (0.66 - 0.88) * t;
      const double l = lumen[i];
      rr = rr * (1 - l) + 0.97 * l;
      gg = gg * (1 - l) + 0.94 * l;
      bb = bb * (1 - l) + 0.96 * l;
      r[i] = rr;
      g[i] = gg;
      b[i] = bb;
    }

  // Nuclei: soft ellipses with chromatin texture, avoiding lumens.
  const int n_nuclei = static_cast<int>(n / 350);
  for (int k = 0; k < n_nuclei; ++k) {
    const double cy = rng.Uniform(0, height), cx = rng.Uniform(0, width);
    const double a = rng.Uniform(2.5, 7.0), e = rng.Uniform(0.5, 0.95), phi = rng.Uniform(0, std::numbers::pi);
    const double shade = rng.Uniform(0.75, 1.1);
    if (lumen[static_cast<size_t>(std::min(height - 1, static_cast<int>(cy))) * width +
              std::min(width - 1, static_cast<int>(cx))] > 0.3) {
      continue;
    }
    const double cph = std::cos(phi), sph = std::sin(phi);
    const int rad = static_cast<int>(a) + 2;
    for (int y = std::max(0, static_cast<int>(cy) - rad); y < std::min(height, static_cast<int>(cy) + rad + 1); ++y)
      for (int x = std::max(0, static_cast<int>(cx) - rad); x < std::min(width, static_cast<int>(cx) + rad + 1); ++x) {
        const double dy = y - cy, dx = x - cx;
        const double u = (dx * cph + dy * sph) / a, v = (-dx * sph + dy * cph) / (a * e);
        const double d = std::sqrt(u * u + v * v);
        const double alpha = (1.0 - SmoothStep(0.75, 1.1, d)) * 0.92;
        if (alpha <= 0.0) continue;
        const double tex = 0.85 + 0.3 * chroma.At(y, x);
        const size_t i = static_cast<size_t>(y) * width + x;
        r[i] = r[i] * (1 - alpha) + alpha * 0.30 * shade * tex;
        g[i] = g[i] * (1 - alpha) + alpha * 0.16 * shade * tex;
        b[i] = b[i] * (1 - alpha) + alpha * 0.48 * shade * tex;
      }
  }

  Tensor out({1, 3, height, width});
  for (size_t i = 0; i < n; ++i) {
    out.data()[i] = static_cast<float>(std::clamp(r[i] + 0.015 * rng.Normal(), 0.0, 1.0));
    out.data()[n + i] = static_cast<float>(std::clamp(g[i] + 0.015 * rng.Normal(), 0.0, 1.0));
    out.data()[2 * n + i] = static_cast<float>(std::clamp(b[i] + 0.015 * rng.Normal(), 0.0, 1.0));
  }
  return out;
}

}  // namespace pwsc
