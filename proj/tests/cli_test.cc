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

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "pwsc/bitstream.h"
#include "pwsc/byte_io.h"
#include "pwsc/cli.h"
#include "pwsc/codec_model.h"
#include "pwsc/dataset.h"
#include "pwsc/feature_extractor.h"
#include "pwsc/image_io.h"
#include "pwsc/metrics.h"
#include "pwsc/report.h"

namespace pwsc {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result Run(std::vector<std::string> args) {
  args.insert(args.begin(), "pwsc");
  std::ostringstream out, err;
  Result r;
  r.code = RunCli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// "key value" lines.
std::map<std::string, std::string> KeyValues(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string k, v;
  while (in >> k >> v) out[k] = v;
  return out;
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// A small tiled corpus and a tiny trained model shared by the cases below.
struct Fixture {
  fs::path dir;
  std::string tiles, train, test, model, tile0;

  Fixture() {
    dir = fs::temp_directory_path() / ("pwsc_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string d = dir.string();
    REQUIRE(Run({"synth", "--out", d + "/corpus", "--slides", "4", "--height", "64", "--width", "96",
                 "--seed", "3"}).code == 0);
    REQUIRE(Run({"tile", "--corpus", d + "/corpus/corpus.jsonl", "--out", d + "/work", "--size", "32"})
                .code == 0);
    tiles = d + "/work/tiles.jsonl";
    REQUIRE(Run({"split", "--tiles", tiles, "--out", d + "/work/split", "--test-fraction", "0.25"}).code == 0);
    train = d + "/work/split/train.jsonl";
    test = d + "/work/split/test.jsonl";
    model = d + "/model.pwgt";
    const Result r = Run({"train", "--tiles", train, "--out", model, "--tile-size", "32", "--steps", "3",
                          "--latent-channels", "4", "--hidden-channels", "4", "--batch", "2"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    tile0 = LoadTileList(tiles)[0];
  }
  ~Fixture() { fs::remove_all(dir); }

  static std::vector<std::string> LoadTileList(const std::string& manifest) {
    std::vector<std::string> out;
    for (const auto& t : ReadTileManifest(manifest)) {
      out.push_back((fs::path(manifest).parent_path() / t.path).string());
    }
    return out;
  }
};

Fixture& F() {
  static Fixture f;
  return f;
}

TEST_CASE("usage errors exit 2") {
  CHECK(Run({}).code == kExitUsage);
  CHECK(Run({"frobnicate"}).code == kExitUsage);
  CHECK(Run({"metrics", "only-one.png"}).code == kExitUsage);
  CHECK(Run({"--help"}).code == kExitOk);
  CHECK(Run({"distort", F().tile0, "--kind", "color", "--level", "80", "-o", "x.png"}).code == kExitUsage);
}

TEST_CASE("tile and split") {
  const auto tiles = ReadTileManifest(F().tiles);
  CHECK(tiles.size() == 4 * 2 * 3);
  const auto train = ReadTileManifest(F().train);
  const auto test = ReadTileManifest(F().test);
  CHECK(train.size() + test.size() == tiles.size());
  std::set<std::string> a, b;
  for (const auto& t : train) a.insert(t.slide_id);
  for (const auto& t : test) b.insert(t.slide_id);
  CHECK(a.size() == 3);
  CHECK(b.size() == 1);
  for (const auto& s : b) CHECK(a.count(s) == 0);
  // Manifest paths resolve relative to the manifest itself.
  CHECK(LoadTile(test[0], fs::path(F().test).parent_path().string()).dim(2) == 32);
}

TEST_CASE("train writes a sidecar") {
  const auto lines = Lines(Slurp(SidecarPath(F().model)));
  REQUIRE(lines.size() >= 4);
  CHECK(lines[0].find("\"kind\":\"meta\"") != std::string::npos);
  CHECK(lines[0].find("\"train_slides\"") != std::string::npos);
  CHECK(lines.back().find("\"kind\":\"step\"") != std::string::npos);
  CHECK(ModelBundle::Load(F().model).config().latent_channels == 4);
}

TEST_CASE("compress and decompress") {
  const std::string d = F().dir.string();
  const Result c = Run({"compress", F().tile0, "--model", F().model, "-o", d + "/t.pwsc"});
  REQUIRE(c.code == 0);
  const auto kv = KeyValues(c.out);
  const auto bytes = ReadFileBytes(d + "/t.pwsc");
  CHECK(std::stoul(kv.at("bytes")) == bytes.size());
  CHECK(std::stod(kv.at("bpp")) == 8.0 * static_cast<double>(bytes.size()) / (32 * 32));

  REQUIRE(Run({"decompress", d + "/t.pwsc", "--model", F().model, "-o", d + "/t.png"}).code == 0);
  const ModelBundle model = ModelBundle::Load(F().model);
  const Tensor in_process = Decode(model, AnalyzeImage(model, LoadImage(F().tile0)));
  const Tensor from_file = LoadImage(d + "/t.png");
  REQUIRE(in_process.shape() == from_file.shape());
  bool same = true;
  for (size_t i = 0; i < in_process.size(); ++i) {
    same = same && ToByte(in_process[i]) == ToByte(from_file[i]);
  }
  CHECK(same);

  SUBCASE("wrong model") {
    const std::string other = d + "/other.pwgt";
    ModelBundle::Initialize(model.config(), 999).Save(other);
    const Result r = Run({"decompress", d + "/t.pwsc", "--model", other, "-o", d + "/u.png"});
    CHECK(r.code == kExitDataError);
    CHECK(r.err.find("fingerprint") != std::string::npos);
  }
  SUBCASE("truncated stream") {
    auto cut = bytes;
    cut.resize(cut.size() - 3);
    WriteFileBytes(d + "/cut.pwsc", cut);
    CHECK(Run({"decompress", d + "/cut.pwsc", "--model", F().model, "-o", d + "/u.png"}).code ==
          kExitCorruptStream);
  }
  SUBCASE("not a stream") {
    WriteFileBytes(d + "/junk.pwsc", std::vector<uint8_t>(40, 7));
    CHECK(Run({"decompress", d + "/junk.pwsc", "--model", F().model, "-o", d + "/u.png"}).code ==
          kExitDataError);
  }
}

TEST_CASE("metrics") {
  const auto paths = Fixture::LoadTileList(F().tiles);
  const Result same = Run({"metrics", paths[0], paths[0]});
  REQUIRE(same.code == 0);
  auto kv = KeyValues(same.out);
  CHECK(kv.at("mse") == "0");
  CHECK(kv.at("psnr") == "inf");
  CHECK(kv.at("ms_ssim") == "1");
  CHECK(kv.at("lpips") == "0");

  const Result diff = Run({"metrics", paths[0], paths[1]});
  REQUIRE(diff.code == 0);
  kv = KeyValues(diff.out);
  const QualityReport q =
      Evaluate(LoadImage(paths[0]), LoadImage(paths[1]), FeatureExtractor::Default(), 0.0);
  CHECK(std::stod(kv.at("mse")) == q.mse);
  CHECK(std::stod(kv.at("psnr")) == q.psnr);
  CHECK(std::stod(kv.at("ms_ssim")) == q.ms_ssim);
  CHECK(std::stod(kv.at("lpips")) == q.lpips);
  CHECK(std::stod(kv.at("feature_l2")) == q.feature_l2);

  const std::string corpus0 = (F().dir / "corpus" / "S000_0.png").string();
  CHECK(Run({"metrics", paths[0], corpus0}).code == kExitDataError);
  CHECK(Run({"metrics", paths[0], "/nonexistent.png"}).code == kExitDataError);
}

TEST_CASE("distort") {
  const std::string out = (F().dir / "d.png").string();
  REQUIRE(Run({"distort", F().tile0, "--kind", "blocking", "--level", "10", "-o", out}).code == 0);
  CHECK(Mse(LoadImage(F().tile0), LoadImage(out)) > 0.0);
}

TEST_CASE("sweep") {
  const Result r = Run({"sweep", "--tiles", F().tiles});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto lines = Lines(r.out);
  CHECK(lines[0] == "# pwsc sweep v1");
  CHECK(lines[1] == "kind,level,metric,mean,std,n");
  REQUIRE(lines.size() == 2 + 6 * 3 + 5 * 3);
  std::vector<double> mse;
  for (size_t i = 2; i < lines.size(); ++i) {
    std::vector<std::string> f;
    std::stringstream s(lines[i]);
    for (std::string x; std::getline(s, x, ',');) f.push_back(x);
    REQUIRE(f.size() == 6);
    CHECK(f[5] == "10");  // default sample count
    if (f[0] == "color" && f[2] == "mse") mse.push_back(std::stod(f[3]));
  }
  REQUIRE(mse.size() == 6);
  for (size_t i = 1; i < mse.size(); ++i) CHECK(mse[i] > mse[i - 1]);
}

TEST_CASE("rd-curve") {
  const std::string d = F().dir.string();
  const std::string ext = d + "/ext.csv";
  {
    std::ofstream o(ext);
    o << "codec,config,bpp,psnr,ms_ssim,lpips\nwebp,q75, 0.81,31.2,0.97,0.05\n";
  }
  const Result r = Run({"rd-curve", "--tiles", F().test, "--model", F().model, "--quality", "20,80",
                        "--external", ext, "--csv", d + "/rd.csv", "--svg", d + "/rd.svg",
                        "--marker-bpp", "1.2"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto lines = Lines(Slurp(d + "/rd.csv"));
  REQUIRE(lines.size() == 2 + 1 + 2 + 1);
  CHECK(lines[1] == RdCsvHeader());
  CHECK(lines[2].rfind("pwsc,0.01,", 0) == 0);
  CHECK(lines[3].rfind("block,20,", 0) == 0);
  CHECK(lines[5] == "webp,q75,0.81,31.2,0.97,0.05,");
  const auto points = ParseRdCsv(Slurp(d + "/rd.csv"));
  CHECK(points[0].tiles == static_cast<int>(ReadTileManifest(F().test).size()));
  CHECK(points[1].bpp < points[2].bpp);

  const std::string svg = Slurp(d + "/rd.svg");
  size_t polylines = 0;
  for (size_t at = 0; (at = svg.find("<polyline", at)) != std::string::npos; ++at) ++polylines;
  CHECK(polylines == 3 * 3);
  CHECK(svg.find("class=\"marker\"") != std::string::npos);

  SUBCASE("external rows must cover the same test set") {
    std::ofstream(ext) << "codec,config,bpp,psnr,ms_ssim,lpips,tiles\nwebp,q75,0.8,31,0.97,0.05,999\n";
    CHECK(Run({"rd-curve", "--tiles", F().test, "--external", ext}).code == kExitDataError);
  }
  SUBCASE("leakage hard-fails") {
    const Result leak = Run({"rd-curve", "--tiles", F().train, "--model", F().model});
    CHECK(leak.code == kExitDataError);
    CHECK(leak.err.find("leak") != std::string::npos);
  }
  SUBCASE("model without a training record") {
    const std::string bare = d + "/bare.pwgt";
    ModelBundle::Load(F().model).Save(bare);
    CHECK(Run({"rd-curve", "--tiles", F().test, "--model", bare}).code == kExitDataError);
  }
  SUBCASE("nothing to evaluate") {
    CHECK(Run({"rd-curve", "--tiles", F().test, "--no-baseline"}).code == kExitUsage);
  }
}

TEST_CASE("thread count does not change reports") {
  const Result one = Run({"rd-curve", "--tiles", F().tiles, "--quality", "50", "--threads", "1"});
  const Result three = Run({"rd-curve", "--tiles", F().tiles, "--quality", "50", "--threads", "3"});
  REQUIRE(one.code == 0);
  CHECK(one.out == three.out);
}

TEST_CASE("config file") {
  TrainConfig c;
  ApplyConfigJson(R"({"lambda": 0.05, "epochs": 3, "codec": {"latent_channels": 12, "activation": "relu"}})", c);
  CHECK(c.lambda == 0.05);
  CHECK(c.epochs == 3);
  CHECK(c.codec.latent_channels == 12);
  CHECK(c.codec.activation == Activation::kRelu);
  CHECK(c.psi == 0.5);
  CHECK_THROWS_AS(ApplyConfigJson(R"({"lamda": 1})", c), Error);
  CHECK_THROWS_AS(ApplyConfigJson(R"({"lambda": "big"})", c), Error);
  CHECK_THROWS_AS(ApplyConfigJson("[1]", c), Error);

  const std::string d = F().dir.string();
  std::ofstream(d + "/cfg.json") << R"({"lambda": 0.02, "max_steps": 2, "tile_size": 32, "batch_size": 1,
    "codec": {"latent_channels": 4, "hidden_channels": 4}})";
  const Result r = Run({"--config", d + "/cfg.json", "train", "--tiles", F().train, "--out",
                        d + "/cfg.pwgt", "--lambda", "0.04"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const std::string meta = Lines(Slurp(SidecarPath(d + "/cfg.pwgt")))[0];
  CHECK(meta.find("\"lambda\":0.04") != std::string::npos);
  CHECK(meta.find("\"steps\":2") != std::string::npos);

  std::ofstream(d + "/bad.json") << R"({"nope": 1})";
  CHECK(Run({"--config", d + "/bad.json", "train", "--tiles", F().train, "--out", d + "/x.pwgt"}).code ==
        kExitUsage);
}

TEST_CASE("report csv") {
  CHECK(FormatNumber(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(FormatNumber(0.5) == "0.500000");
  const auto pts = ParseRdCsv("# comment\ncodec,config,bpp,psnr,ms_ssim,lpips,tiles\nx,1,0.5,inf,1,0,3\n");
  REQUIRE(pts.size() == 1);
  CHECK(std::isinf(pts[0].psnr));
  CHECK(pts[0].tiles == 3);
  CHECK_THROWS_AS(ParseRdCsv("codec,bpp\n"), Error);
  CHECK_THROWS_AS(ParseRdCsv("codec,config,bpp,psnr,ms_ssim,lpips\nx,1,abc,1,1,1\n"), Error);
  CHECK_THROWS_AS(ParseRdCsv("codec,config,bpp,psnr,ms_ssim,lpips\nx,1,1\n"), Error);
  CHECK_THROWS_AS(ParseRdCsv(""), Error);
}

// Regression files from a fixed synthetic corpus; regenerate with
// PWSC_UPDATE_GOLDEN=1 after an intended format or numeric change.
TEST_CASE("golden reports") {
  const fs::path dir = F().dir / "golden";
  const std::string d = dir.string();
  REQUIRE(Run({"synth", "--out", d + "/corpus", "--slides", "2", "--height", "64", "--width", "64",
               "--seed", "11"}).code == 0);
  REQUIRE(Run({"tile", "--corpus", d + "/corpus/corpus.jsonl", "--out", d, "--size", "32"}).code == 0);
  const Result rd = Run({"rd-curve", "--tiles", d + "/tiles.jsonl", "--quality", "10,50,90"});
  const Result sweep = Run({"sweep", "--tiles", d + "/tiles.jsonl", "--n", "4", "--seed", "5"});
  REQUIRE(rd.code == 0);
  REQUIRE(sweep.code == 0);
  const fs::path golden = fs::path(PWSC_SOURCE_DIR) / "tests" / "golden";
  if (std::getenv("PWSC_UPDATE_GOLDEN") != nullptr) {
    std::ofstream(golden / "rd_block.csv") << rd.out;
    std::ofstream(golden / "sweep.csv") << sweep.out;
  }
  CHECK(rd.out == Slurp(golden / "rd_block.csv"));
  CHECK(sweep.out == Slurp(golden / "sweep.csv"));
}

}  // namespace
}  // namespace pwsc
