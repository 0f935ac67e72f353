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

#include "pwsc/cli.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pwsc/bitstream.h"
#include "pwsc/block_codec.h"
#include "pwsc/byte_io.h"
#include "pwsc/codec_model.h"
#include "pwsc/dataset.h"
#include "pwsc/distortions.h"
#include "pwsc/error.h"
#include "pwsc/feature_extractor.h"
#include "pwsc/image_io.h"
#include "pwsc/metrics.h"
#include "pwsc/parallel.h"
#include "pwsc/report.h"
#include "pwsc/rng.h"

namespace pwsc {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Globals {
  uint64_t seed = 1;
  int threads = 1;
  std::string config_path;
};

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kDataError, "cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kDataError, "cannot write " + path);
  out << text;
  if (!out) Fail(ErrorCode::kDataError, "short write to " + path);
}

void EnsureParentDir(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::string Absolute(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  const fs::path fp(p);
  return fs::absolute(fp.is_relative() ? base / fp : fp).lexically_normal().string();
}

std::string RelativeTo(const fs::path& dir, const std::string& p) {
  if (p.empty()) return p;
  const fs::path rel = fs::path(p).lexically_relative(fs::absolute(dir).lexically_normal());
  return rel.empty() ? p : rel.generic_string();
}

fs::path ManifestDir(const std::string& manifest) {
  return fs::absolute(fs::path(manifest)).parent_path();
}

// Tile manifests store paths relative to their own directory; in memory they
// are absolute so lists can be rewritten elsewhere.
std::vector<TileRef> LoadTileList(const std::string& manifest) {
  auto tiles = ReadTileManifest(manifest);
  const fs::path dir = ManifestDir(manifest);
  for (auto& t : tiles) {
    t.path = Absolute(dir, t.path);
    t.source = Absolute(dir, t.source);
  }
  return tiles;
}

void SaveTileList(const std::string& manifest, std::vector<TileRef> tiles,
                  const std::string& split) {
  EnsureParentDir(manifest);
  const fs::path dir = ManifestDir(manifest);
  for (auto& t : tiles) {
    t.path = RelativeTo(dir, t.path);
    t.source = RelativeTo(dir, t.source);
  }
  WriteTileManifest(manifest, tiles, split);
}

std::vector<std::string> SlideIds(const std::vector<TileRef>& tiles) {
  std::set<std::string> ids;
  for (const auto& t : tiles) ids.insert(t.slide_id);
  return {ids.begin(), ids.end()};
}

std::string Hex(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string ShortNum(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Config

const char* ActivationName(Activation a) { return a == Activation::kRelu ? "relu" : "gdn"; }

Activation ParseActivation(const std::string& s) {
  if (s == "gdn") return Activation::kGdn;
  if (s == "relu") return Activation::kRelu;
  Fail(ErrorCode::kInvalidArgument, "activation must be gdn or relu, got '" + s + "'");
}

json ConfigToJson(const TrainConfig& c) {
  return {{"lambda", c.lambda},
          {"psi", c.psi},
          {"psi_late", c.psi_late},
          {"psi_switch_epoch", c.psi_switch_epoch},
          {"lr", c.lr},
          {"batch_size", c.batch_size},
          {"tile_size", c.tile_size},
          {"epochs", c.epochs},
          {"max_steps", c.max_steps},
          {"patience", c.patience},
          {"plateau_factor", c.plateau_factor},
          {"plateau_rel", c.plateau_rel},
          {"min_lr", c.min_lr},
          {"divergence_factor", c.divergence_factor},
          {"divergence_epochs", c.divergence_epochs},
          {"seed", c.seed},
          {"augment", c.augment},
          {"brightness", c.brightness},
          {"contrast", c.contrast},
          {"saturation", c.saturation},
          {"hue", c.hue},
          {"codec",
           {{"latent_channels", c.codec.latent_channels},
            {"hidden_channels", c.codec.hidden_channels},
            {"stages", c.codec.stages},
            {"activation", ActivationName(c.codec.activation)}}}};
}

}  // namespace

void ApplyConfigJson(const std::string& text, TrainConfig& c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) Fail(ErrorCode::kInvalidArgument, "config must be a JSON object");
  using Setter = std::function<void(const json&)>;
  auto num = [](double& f) { return Setter([&f](const json& v) { f = v.get<double>(); }); };
  auto integer = [](int& f) { return Setter([&f](const json& v) { f = v.get<int>(); }); };
  std::map<std::string, Setter> top = {
      {"lambda", num(c.lambda)},
      {"psi", num(c.psi)},
      {"psi_late", num(c.psi_late)},
      {"psi_switch_epoch", integer(c.psi_switch_epoch)},
      {"lr", num(c.lr)},
      {"batch_size", integer(c.batch_size)},
      {"tile_size", integer(c.tile_size)},
      {"epochs", integer(c.epochs)},
      {"max_steps", [&](const json& v) { c.max_steps = v.get<int64_t>(); }},
      {"patience", integer(c.patience)},
      {"plateau_factor", num(c.plateau_factor)},
      {"plateau_rel", num(c.plateau_rel)},
      {"min_lr", num(c.min_lr)},
      {"divergence_factor", num(c.divergence_factor)},
      {"divergence_epochs", integer(c.divergence_epochs)},
      {"seed", [&](const json& v) { c.seed = v.get<uint64_t>(); }},
      {"augment", [&](const json& v) { c.augment = v.get<bool>(); }},
      {"brightness", num(c.brightness)},
      {"contrast", num(c.contrast)},
      {"saturation", num(c.saturation)},
      {"hue", num(c.hue)},
  };
  std::map<std::string, Setter> codec = {
      {"latent_channels", integer(c.codec.latent_channels)},
      {"hidden_channels", integer(c.codec.hidden_channels)},
      {"stages", integer(c.codec.stages)},
      {"activation", [&](const json& v) { c.codec.activation = ParseActivation(v.get<std::string>()); }},
  };
  auto apply = [](const json& obj, std::map<std::string, Setter>& setters, const std::string& prefix) {
    for (const auto& [key, value] : obj.items()) {
      auto it = setters.find(key);
      if (it == setters.end()) Fail(ErrorCode::kInvalidArgument, "unknown config key '" + prefix + key + "'");
      try {
        it->second(value);
      } catch (const json::exception&) {
        Fail(ErrorCode::kInvalidArgument, "config key '" + prefix + key + "' has the wrong type");
      }
    }
  };
  json rest = j;
  if (rest.contains("codec")) {
    if (!rest["codec"].is_object()) Fail(ErrorCode::kInvalidArgument, "config 'codec' must be an object");
    apply(rest["codec"], codec, "codec.");
    rest.erase("codec");
  }
  apply(rest, top, "");
}

std::string SidecarPath(const std::string& model_path) { return model_path + ".jsonl"; }

namespace {

struct Sidecar {
  bool found = false;
  double lambda = 0.0;
  std::vector<std::string> train_slides;
};

Sidecar ReadSidecar(const std::string& model_path) {
  Sidecar s;
  std::ifstream in(SidecarPath(model_path));
  if (!in) return s;
  std::string line;
  if (!std::getline(in, line)) return s;
  try {
    const json meta = json::parse(line);
    s.lambda = meta.at("lambda").get<double>();
    s.train_slides = meta.at("train_slides").get<std::vector<std::string>>();
    s.found = true;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kDataError, SidecarPath(model_path) + ": bad training record (" + e.what() + ")");
  }
  return s;
}

std::vector<Tensor> LoadTiles(const std::vector<TileRef>& refs, int threads) {
  std::vector<Tensor> out(refs.size());
  ParallelFor(refs.size(), threads, [&](size_t i) { out[i] = LoadTile(refs[i]); });
  return out;
}

// Deterministic subset of at most n indices, in their original order.
std::vector<size_t> Sample(size_t count, size_t n, uint64_t seed) {
  std::vector<size_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  if (count <= n) return idx;
  Rng rng(seed);
  for (size_t i = count - 1; i > 0; --i) std::swap(idx[i], idx[rng.Below(i + 1)]);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// ---------------------------------------------------------------------------
// Subcommands

struct SynthArgs {
  std::string out_dir;
  int slides = 4;
  int images_per_slide = 1;
  int height = 448;
  int width = 448;
};

void CmdSynth(const SynthArgs& a, const Globals& g, std::ostream& out) {
  PWSC_CHECK_ARG(a.slides >= 1 && a.images_per_slide >= 1, "need at least one slide and image");
  fs::create_directories(a.out_dir);
  std::vector<SlideRecord> records;
  for (int s = 0; s < a.slides; ++s) {
    char id[16];
    std::snprintf(id, sizeof(id), "S%03d", s);
    for (int k = 0; k < a.images_per_slide; ++k) {
      SlideRecord r;
      r.slide_id = id;
      r.path = std::string(id) + "_" + std::to_string(k) + ".png";
      r.height = a.height;
      r.width = a.width;
      records.push_back(r);
    }
  }
  ParallelFor(records.size(), g.threads, [&](size_t i) {
    const uint64_t seed = g.seed * 1000003ULL + i;
    SaveImage(SynthesizeTissue(a.height, a.width, seed), (fs::path(a.out_dir) / records[i].path).string());
  });
  const std::string manifest = (fs::path(a.out_dir) / "corpus.jsonl").string();
  WriteCorpusManifest(manifest, records);
  out << "wrote " << records.size() << " images to " << manifest << "\n";
}

struct TileArgs {
  std::string corpus;
  std::vector<std::string> images;
  std::string out_dir;
  std::string manifest;
  int size = 224;
  int stride = 0;  // 0: the tile size
};

void CmdTile(const TileArgs& a, const Globals& g, std::ostream& out) {
  std::vector<SlideRecord> records;
  if (!a.corpus.empty()) {
    records = ReadCorpusManifest(a.corpus);
    const fs::path dir = ManifestDir(a.corpus);
    for (auto& r : records) r.path = Absolute(dir, r.path);
  }
  for (const auto& img : a.images) {
    SlideRecord r;
    r.slide_id = fs::path(img).stem().string();
    r.path = Absolute(fs::current_path(), img);
    records.push_back(r);
  }
  if (records.empty()) Fail(ErrorCode::kInvalidArgument, "tile: give --corpus or image paths");
  const int stride = a.stride > 0 ? a.stride : a.size;
  PWSC_CHECK_ARG(a.size >= 8 && a.stride >= 0, "tile: bad size or stride");

  const fs::path tile_dir = fs::absolute(fs::path(a.out_dir) / "tiles");
  std::vector<std::vector<TileRef>> per(records.size());
  ParallelFor(records.size(), g.threads, [&](size_t i) {
    const SlideRecord& r = records[i];
    const Tensor image = LoadImage(r.path);
    const fs::path dir = tile_dir / r.slide_id;
    fs::create_directories(dir);
    const std::string stem = fs::path(r.path).stem().string();
    for (const TileRect& rect : TileGrid(image.dim(2), image.dim(3), a.size, stride)) {
      TileRef t;
      t.slide_id = r.slide_id;
      t.source = r.path;
      t.rect = rect;
      t.path = (dir / (stem + "_" + std::to_string(rect.y) + "_" + std::to_string(rect.x) + ".png")).string();
      SaveImage(CropTile(image, rect), t.path);
      per[i].push_back(std::move(t));
    }
  });
  std::vector<TileRef> tiles;
  for (auto& p : per) tiles.insert(tiles.end(), p.begin(), p.end());
  const std::string manifest =
      a.manifest.empty() ? (fs::path(a.out_dir) / "tiles.jsonl").string() : a.manifest;
  SaveTileList(manifest, tiles, "");
  out << "tiles " << tiles.size() << " from " << records.size() << " images -> " << manifest << "\n";
}

struct SplitArgs {
  std::string tiles;
  std::string out_dir;
  double test_fraction = 0.2;
};

void CmdSplit(const SplitArgs& a, const Globals& g, std::ostream& out) {
  const auto tiles = LoadTileList(a.tiles);
  const SplitResult split = SplitTiles(tiles, a.test_fraction, g.seed);
  CheckNoLeakage(split.train.slide_ids, split.test.slide_ids);
  const std::string train = (fs::path(a.out_dir) / "train.jsonl").string();
  const std::string test = (fs::path(a.out_dir) / "test.jsonl").string();
  SaveTileList(train, split.train.tiles, "train");
  SaveTileList(test, split.test.tiles, "test");
  out << "train " << split.train.tiles.size() << " tiles / " << split.train.slide_ids.size()
      << " slides -> " << train << "\n";
  out << "test " << split.test.tiles.size() << " tiles / " << split.test.slide_ids.size()
      << " slides -> " << test << "\n";
}

struct TrainArgs {
  std::string tiles;
  std::string out;
  std::string init;
  int max_tiles = 0;
};

void CmdTrain(const TrainArgs& a, TrainConfig config, const Globals& g, std::ostream& out,
              std::ostream& err) {
  auto refs = LoadTileList(a.tiles);
  if (a.max_tiles > 0 && refs.size() > static_cast<size_t>(a.max_tiles)) refs.resize(a.max_tiles);
  if (refs.empty()) Fail(ErrorCode::kDataError, a.tiles + ": no tiles");
  std::vector<Tensor> tiles = LoadTiles(refs, g.threads);
  for (auto& t : tiles) {
    if (t.dim(2) < config.tile_size || t.dim(3) < config.tile_size) {
      Fail(ErrorCode::kDataError, "tiles are smaller than tile_size " + std::to_string(config.tile_size));
    }
    if (t.dim(2) != config.tile_size || t.dim(3) != config.tile_size) {
      t = CropTile(t, TileRect{0, 0, config.tile_size});
    }
  }
  config.Validate();

  std::unique_ptr<ModelBundle> init;
  if (!a.init.empty()) init = std::make_unique<ModelBundle>(ModelBundle::Load(a.init));

  const FeatureExtractor fx = FeatureExtractor::Default();
  EnsureParentDir(a.out);
  TrainResult r = Train(
      tiles, config, fx,
      [&](const ModelBundle& m, const EpochSummary& s) {
        err << "epoch " << s.epoch << " steps " << s.steps << " loss " << ShortNum(s.mean_total)
            << " lr " << ShortNum(s.lr) << "\n";
        m.Save(a.out);
      },
      init.get());
  r.model.Save(a.out);

  std::vector<std::string> lines;
  json meta = {{"kind", "meta"},
               {"fingerprint", Hex(r.model.fingerprint())},
               {"lambda", config.lambda},
               {"psi", config.psi},
               {"steps", r.history.size()},
               {"diverged", r.diverged},
               {"tiles", tiles.size()},
               {"train_slides", SlideIds(refs)},
               {"config", ConfigToJson(config)}};
  std::ofstream side(SidecarPath(a.out));
  if (!side) Fail(ErrorCode::kDataError, "cannot write " + SidecarPath(a.out));
  side << meta.dump() << "\n";
  for (const auto& e : r.epochs) {
    side << json{{"kind", "epoch"}, {"epoch", e.epoch}, {"steps", e.steps},
                 {"mean_total", e.mean_total}, {"lr", e.lr}, {"psi", e.psi}}.dump()
         << "\n";
  }
  for (const auto& h : r.history) {
    side << json{{"kind", "step"}, {"step", h.step},   {"epoch", h.epoch},
                 {"total", h.total}, {"rate_bpp", h.rate_bpp}, {"mse", h.mse},
                 {"feature", h.feature}, {"lambda", h.lambda}, {"psi", h.psi}, {"lr", h.lr}}.dump()
         << "\n";
  }
  if (!side) Fail(ErrorCode::kDataError, "short write to " + SidecarPath(a.out));

  const double first = r.history.empty() ? 0.0 : r.history.front().total;
  const double last = r.history.empty() ? 0.0 : r.history.back().total;
  out << "model " << a.out << " fingerprint " << Hex(r.model.fingerprint()) << " steps "
      << r.history.size() << " loss " << ShortNum(first) << " -> " << ShortNum(last) << "\n";
  if (r.diverged) Fail(ErrorCode::kNumeric, r.report);
}

struct CodecArgs {
  std::string input;
  std::string model;
  std::string output;
};

void CmdCompress(const CodecArgs& a, std::ostream& out) {
  const ModelBundle model = ModelBundle::Load(a.model);
  const Tensor image = LoadImage(a.input);
  const CompressedImage c = CompressImage(model, image);
  EnsureParentDir(a.output);
  WriteFileBytes(a.output, c.bytes);
  out << "bytes " << c.bytes.size() << "\n"
      << "bpp " << Num(c.bpp) << "\n"
      << "payload_bytes " << c.payload_bytes << "\n"
      << "estimated_bits " << Num(c.estimated_bits) << "\n";
}

void CmdDecompress(const CodecArgs& a, std::ostream& out) {
  const ModelBundle model = ModelBundle::Load(a.model);
  const std::vector<uint8_t> bytes = ReadFileBytes(a.input);
  const Tensor image = DecompressImage(model, bytes);
  EnsureParentDir(a.output);
  SaveImage(image, a.output);
  out << "size " << image.dim(3) << "x" << image.dim(2) << "\n"
      << "bpp " << Num(BitsPerPixel(bytes.size(), image.dim(2), image.dim(3))) << "\n";
}

void CmdMetrics(const std::string& path_a, const std::string& path_b, std::ostream& out) {
  const Tensor a = LoadImage(path_a);
  const Tensor b = LoadImage(path_b);
  if (a.shape() != b.shape()) {
    Fail(ErrorCode::kDataError, "image sizes differ: " + ShapeString(a.shape()) + " vs " +
                                    ShapeString(b.shape()));
  }
  const QualityReport q = Evaluate(a, b, FeatureExtractor::Default(), 0.0);
  out << "mse " << Num(q.mse) << "\n"
      << "psnr " << Num(q.psnr) << "\n"
      << "ms_ssim " << Num(q.ms_ssim) << "\n"
      << "lpips " << Num(q.lpips) << "\n"
      << "feature_l2 " << Num(q.feature_l2) << "\n";
}

struct DistortArgs {
  std::string input;
  std::string output;
  std::string kind;
  double level = 0.0;
};

void CmdDistort(const DistortArgs& a, std::ostream& out) {
  DistortionSpec spec{ParseDistortionKind(a.kind), a.level};
  spec.Validate();
  const Tensor image = LoadImage(a.input);
  EnsureParentDir(a.output);
  SaveImage(ApplyDistortion(image, spec), a.output);
  out << "wrote " << a.output << "\n";
}

std::vector<Tensor> LoadInputs(const std::string& manifest, const std::vector<std::string>& images,
                               int threads) {
  std::vector<TileRef> refs;
  if (!manifest.empty()) refs = LoadTileList(manifest);
  std::vector<Tensor> out = LoadTiles(refs, threads);
  for (const auto& p : images) out.push_back(LoadImage(p));
  return out;
}

struct SweepArgs {
  std::string tiles;
  std::vector<std::string> images;
  std::vector<std::string> kinds = {"color", "blocking"};
  std::vector<double> color_levels = {0, 10, 20, 30, 40, 50};
  std::vector<double> blocking_levels = {90, 70, 50, 30, 10};
  int n = 10;
  std::string out;
};

void CmdSweep(const SweepArgs& a, const Globals& g, std::ostream& out) {
  PWSC_CHECK_ARG(a.n >= 1, "sweep: --n must be positive");
  std::vector<Tensor> all = LoadInputs(a.tiles, a.images, g.threads);
  if (all.empty()) Fail(ErrorCode::kDataError, "sweep: empty corpus");
  std::vector<Tensor> images;
  for (size_t i : Sample(all.size(), static_cast<size_t>(a.n), g.seed)) images.push_back(all[i]);
  const FeatureExtractor fx = FeatureExtractor::Default();

  std::vector<SweepRow> rows;
  for (const auto& kind_name : a.kinds) {
    const DistortionKind kind = ParseDistortionKind(kind_name);
    const auto& levels = kind == DistortionKind::kColorShift ? a.color_levels : a.blocking_levels;
    for (double level : levels) {
      const DistortionSpec spec{kind, level};
      spec.Validate();
      std::vector<std::array<double, 3>> v(images.size());
      ParallelFor(images.size(), g.threads, [&](size_t i) {
        const Tensor d = ApplyDistortion(images[i], spec);
        v[i] = {Mse(images[i], d), 1.0 - MsSsim(images[i], d), Lpips(images[i], d, fx)};
      });
      const char* names[] = {"mse", "one_minus_ms_ssim", "lpips"};
      for (int m = 0; m < 3; ++m) {
        double sum = 0.0;
        for (const auto& x : v) sum += x[m];
        const double mean = sum / static_cast<double>(v.size());
        double var = 0.0;
        for (const auto& x : v) var += (x[m] - mean) * (x[m] - mean);
        rows.push_back({DistortionKindName(kind), level, names[m], mean,
                        std::sqrt(var / static_cast<double>(v.size())), static_cast<int>(v.size())});
      }
    }
  }
  const std::string csv = FormatSweepCsv(rows);
  if (a.out.empty()) {
    out << csv;
  } else {
    EnsureParentDir(a.out);
    WriteText(a.out, csv);
    out << "sweep " << rows.size() << " rows over " << images.size() << " images -> " << a.out << "\n";
  }
}

struct RdArgs {
  std::string tiles;
  std::vector<std::string> models;
  std::vector<int> qualities = {10, 30, 50, 70, 90};
  bool no_baseline = false;
  std::string external;
  std::string csv;
  std::string svg;
  double marker_bpp = -1.0;
  int max_tiles = 0;
};

struct TileScore {
  double bpp = 0, psnr = 0, ms_ssim = 0, lpips = 0;
};

RdPoint Aggregate(const std::string& codec, const std::string& config,
                  const std::vector<TileScore>& s) {
  RdPoint p;
  p.codec = codec;
  p.config = config;
  p.tiles = static_cast<int>(s.size());
  for (const auto& t : s) {
    p.bpp += t.bpp;
    p.psnr += t.psnr;
    p.ms_ssim += t.ms_ssim;
    p.lpips += t.lpips;
  }
  const double n = static_cast<double>(s.size());
  p.bpp /= n;
  p.psnr /= n;
  p.ms_ssim /= n;
  p.lpips /= n;
  return p;
}

void CmdRdCurve(const RdArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  auto refs = LoadTileList(a.tiles);
  if (a.max_tiles > 0 && refs.size() > static_cast<size_t>(a.max_tiles)) refs.resize(a.max_tiles);
  if (refs.empty()) Fail(ErrorCode::kDataError, "rd-curve: no test tiles");
  const auto test_slides = SlideIds(refs);
  const bool baseline = !a.no_baseline && !a.qualities.empty();
  if (a.models.empty() && !baseline && a.external.empty()) {
    Fail(ErrorCode::kInvalidArgument, "rd-curve: need a model, baseline qualities or an external csv");
  }

  // All checks before any evaluation.
  std::vector<Sidecar> sidecars;
  for (const auto& m : a.models) {
    Sidecar s = ReadSidecar(m);
    if (!s.found) Fail(ErrorCode::kDataError, m + ": no training record " + SidecarPath(m));
    CheckNoLeakage(s.train_slides, test_slides);
    sidecars.push_back(std::move(s));
  }
  std::vector<RdPoint> imported;
  if (!a.external.empty()) {
    imported = ParseRdCsv(ReadText(a.external));
    for (const auto& p : imported) {
      if (p.tiles != 0 && p.tiles != static_cast<int>(refs.size())) {
        Fail(ErrorCode::kDataError, a.external + ": row " + p.codec + "/" + p.config + " covers " +
                                        std::to_string(p.tiles) + " tiles, test set has " +
                                        std::to_string(refs.size()));
      }
    }
  }

  const std::vector<Tensor> tiles = LoadTiles(refs, g.threads);
  const FeatureExtractor fx = FeatureExtractor::Default();
  std::vector<RdPoint> points;

  for (size_t k = 0; k < a.models.size(); ++k) {
    const ModelBundle model = ModelBundle::Load(a.models[k]);
    std::vector<TileScore> scores(tiles.size());
    ParallelFor(tiles.size(), g.threads, [&](size_t i) {
      const CompressedImage c = CompressImage(model, tiles[i]);
      const double payload_bits = 8.0 * static_cast<double>(c.payload_bytes);
      if (std::abs(payload_bits - c.estimated_bits) > 0.05 * c.estimated_bits + 64.0) {
        Fail(ErrorCode::kDataError, a.models[k] + ": tile " + std::to_string(i) + " codes " +
                                        Num(payload_bits) + " bits against an estimate of " +
                                        Num(c.estimated_bits));
      }
      const Tensor recon = DecompressImage(model, c.bytes);
      const QualityReport q = Evaluate(tiles[i], recon, fx, c.bpp);
      scores[i] = {c.bpp, q.psnr, q.ms_ssim, q.lpips};
    });
    points.push_back(Aggregate("pwsc", ShortNum(sidecars[k].lambda), scores));
    err << "pwsc lambda " << ShortNum(sidecars[k].lambda) << " bpp " << ShortNum(points.back().bpp) << "\n";
  }
  if (baseline) {
    std::vector<int> qs = a.qualities;
    std::sort(qs.begin(), qs.end());
    for (int q : qs) {
      std::vector<TileScore> scores(tiles.size());
      ParallelFor(tiles.size(), g.threads, [&](size_t i) {
        const auto bytes = BlockEncode(tiles[i], q);
        const Tensor recon = BlockDecode(bytes);
        const double bpp = BitsPerPixel(bytes.size(), tiles[i].dim(2), tiles[i].dim(3));
        const QualityReport r = Evaluate(tiles[i], recon, fx, bpp);
        scores[i] = {bpp, r.psnr, r.ms_ssim, r.lpips};
      });
      points.push_back(Aggregate("block", std::to_string(q), scores));
    }
  }
  points.insert(points.end(), imported.begin(), imported.end());

  const std::string csv = FormatRdCsv(points);
  if (!a.csv.empty()) {
    EnsureParentDir(a.csv);
    WriteText(a.csv, csv);
  } else {
    out << csv;
  }
  if (!a.svg.empty()) {
    RdPlotOptions opt;
    if (a.marker_bpp >= 0) opt.marker_bpp = a.marker_bpp;
    opt.title = "rate-distortion on " + std::to_string(refs.size()) + " test tiles";
    EnsureParentDir(a.svg);
    WriteText(a.svg, RdCurveSvg(points, opt));
  }
  if (!a.csv.empty()) {
    out << "rd-curve " << points.size() << " points over " << refs.size() << " tiles -> " << a.csv << "\n";
  }
}

int ExitCodeFor(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kInvalidArgument: return kExitUsage;
    case ErrorCode::kCorruptStream: return kExitCorruptStream;
    default: return kExitDataError;
  }
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"pwsc: learned and block image codecs for histology tiles"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for splits, sampling and training")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--config", g.config_path, "JSON file with training and codec settings");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic tissue corpus and its manifest");
  c_synth->add_option("--out", synth.out_dir, "Output directory")->required();
  c_synth->add_option("--slides", synth.slides, "Number of slides")->capture_default_str();
  c_synth->add_option("--images-per-slide", synth.images_per_slide, "Images per slide")->capture_default_str();
  c_synth->add_option("--height", synth.height, "Image height")->capture_default_str();
  c_synth->add_option("--width", synth.width, "Image width")->capture_default_str();

  TileArgs tile;
  auto* c_tile = app.add_subcommand("tile", "Cut images into square tiles");
  c_tile->add_option("images", tile.images, "Image files (slide id = file stem)");
  c_tile->add_option("--corpus", tile.corpus, "Corpus manifest (JSONL)");
  c_tile->add_option("--out", tile.out_dir, "Output directory")->required();
  c_tile->add_option("--manifest", tile.manifest, "Tile manifest path (default <out>/tiles.jsonl)");
  c_tile->add_option("--size", tile.size, "Tile side in pixels")->capture_default_str();
  c_tile->add_option("--stride", tile.stride, "Step between tiles (default: the tile size)");

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "Slide-level train/test split");
  c_split->add_option("--tiles", split.tiles, "Tile manifest")->required();
  c_split->add_option("--out", split.out_dir, "Output directory")->required();
  c_split->add_option("--test-fraction", split.test_fraction, "Share of slides held out")->capture_default_str();

  TrainArgs train;
  TrainConfig config;
  std::string activation;
  bool no_augment = false;
  auto* c_train = app.add_subcommand("train", "Train a learned codec");
  c_train->add_option("--tiles", train.tiles, "Training tile manifest")->required();
  c_train->add_option("--out", train.out, "Model file")->required();
  c_train->add_option("--init", train.init, "Start from this model");
  c_train->add_option("--max-tiles", train.max_tiles, "Use at most this many tiles");
  auto* o_lambda = c_train->add_option("--lambda", config.lambda, "Rate weight")->capture_default_str();
  auto* o_psi = c_train->add_option("--psi", config.psi, "Feature-distance weight")->capture_default_str();
  auto* o_lr = c_train->add_option("--lr", config.lr, "Adam learning rate")->capture_default_str();
  auto* o_epochs = c_train->add_option("--epochs", config.epochs)->capture_default_str();
  auto* o_steps = c_train->add_option("--steps", config.max_steps, "Stop after this many steps (0: no limit)");
  auto* o_batch = c_train->add_option("--batch", config.batch_size)->capture_default_str();
  auto* o_tile = c_train->add_option("--tile-size", config.tile_size, "Training crop size")->capture_default_str();
  auto* o_latent = c_train->add_option("--latent-channels", config.codec.latent_channels)->capture_default_str();
  auto* o_hidden = c_train->add_option("--hidden-channels", config.codec.hidden_channels)->capture_default_str();
  auto* o_stages = c_train->add_option("--stages", config.codec.stages, "Stride-2 stages")->capture_default_str();
  auto* o_act = c_train->add_option("--activation", activation, "gdn or relu");
  c_train->add_flag("--no-augment", no_augment, "Disable flips and color jitter");

  CodecArgs comp, decomp;
  auto* c_comp = app.add_subcommand("compress", "Image -> .pwsc stream");
  c_comp->add_option("input", comp.input, "PNG or PPM image")->required();
  c_comp->add_option("--model", comp.model, "Trained model")->required();
  c_comp->add_option("-o,--out", comp.output, "Output stream")->required();
  auto* c_decomp = app.add_subcommand("decompress", ".pwsc stream -> image (PNG, or PPM by extension)");
  c_decomp->add_option("input", decomp.input, "Stream from compress")->required();
  c_decomp->add_option("--model", decomp.model, "Model used to compress")->required();
  c_decomp->add_option("-o,--out", decomp.output, "Output image")->required();

  std::string metric_a, metric_b;
  auto* c_metrics = app.add_subcommand("metrics", "Quality metrics between two images");
  c_metrics->add_option("reference", metric_a)->required();
  c_metrics->add_option("distorted", metric_b)->required();

  DistortArgs distort;
  auto* c_distort = app.add_subcommand("distort", "Apply a color shift or blocking distortion");
  c_distort->add_option("input", distort.input)->required();
  c_distort->add_option("--kind", distort.kind, "color or blocking")->required();
  c_distort->add_option("--level", distort.level, "a* bias, or block-codec quality")->required();
  c_distort->add_option("-o,--out", distort.output, "Output image")->required();

  SweepArgs sweep;
  auto* c_sweep = app.add_subcommand("sweep", "Metric response to distortion levels");
  c_sweep->add_option("images", sweep.images, "Images (alternative to --tiles)");
  c_sweep->add_option("--tiles", sweep.tiles, "Tile manifest");
  c_sweep->add_option("--kinds", sweep.kinds, "color and/or blocking")->delimiter(',')->capture_default_str();
  c_sweep->add_option("--color-levels", sweep.color_levels, "a* offsets")->delimiter(',');
  c_sweep->add_option("--blocking-levels", sweep.blocking_levels, "Block-codec qualities")->delimiter(',');
  c_sweep->add_option("--n", sweep.n, "Images sampled")->capture_default_str();
  c_sweep->add_option("-o,--out", sweep.out, "CSV path (default stdout)");

  RdArgs rd;
  auto* c_rd = app.add_subcommand("rd-curve", "Rate-distortion points, CSV and SVG");
  c_rd->add_option("--tiles", rd.tiles, "Test tile manifest")->required();
  c_rd->add_option("--model", rd.models, "Learned model (repeatable)");
  c_rd->add_option("--quality", rd.qualities, "Block codec qualities")->delimiter(',');
  c_rd->add_flag("--no-baseline", rd.no_baseline, "Skip the block codec");
  c_rd->add_option("--external", rd.external, "CSV rows from other codecs");
  c_rd->add_option("--csv", rd.csv, "CSV path (default stdout)");
  c_rd->add_option("--svg", rd.svg, "SVG path");
  c_rd->add_option("--marker-bpp", rd.marker_bpp, "Reference bitrate marked on the plots");
  c_rd->add_option("--max-tiles", rd.max_tiles, "Evaluate at most this many test tiles");

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!g.config_path.empty()) {
      // Flags given on the command line win over the config file.
      const TrainConfig flags = config;
      ApplyConfigJson(ReadText(g.config_path), config);
      auto keep = [](CLI::Option* o, auto& field, const auto& value) {
        if (o->count()) field = value;
      };
      keep(o_lambda, config.lambda, flags.lambda);
      keep(o_psi, config.psi, flags.psi);
      keep(o_lr, config.lr, flags.lr);
      keep(o_epochs, config.epochs, flags.epochs);
      keep(o_steps, config.max_steps, flags.max_steps);
      keep(o_batch, config.batch_size, flags.batch_size);
      keep(o_tile, config.tile_size, flags.tile_size);
      keep(o_latent, config.codec.latent_channels, flags.codec.latent_channels);
      keep(o_hidden, config.codec.hidden_channels, flags.codec.hidden_channels);
      keep(o_stages, config.codec.stages, flags.codec.stages);
    }
    if (c_synth->parsed()) CmdSynth(synth, g, out);
    if (c_tile->parsed()) CmdTile(tile, g, out);
    if (c_split->parsed()) CmdSplit(split, g, out);
    if (c_train->parsed()) {
      if (app.get_option("--seed")->count() || g.config_path.empty()) config.seed = g.seed;
      if (no_augment) config.augment = false;
      if (o_act->count()) config.codec.activation = ParseActivation(activation);
      CmdTrain(train, config, g, out, err);
    }
    if (c_comp->parsed()) CmdCompress(comp, out);
    if (c_decomp->parsed()) CmdDecompress(decomp, out);
    if (c_metrics->parsed()) CmdMetrics(metric_a, metric_b, out);
    if (c_distort->parsed()) CmdDistort(distort, out);
    if (c_sweep->parsed()) CmdSweep(sweep, g, out);
    if (c_rd->parsed()) CmdRdCurve(rd, g, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return ExitCodeFor(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitOk;
}

}  // namespace pwsc
