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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "pwsc/bitstream.h"
#include "pwsc/codec_model.h"
#include "pwsc/error.h"
#include "pwsc/weight_file.h"
#include "test_util.h"

namespace pwsc {
namespace {

using testing::RandomTensor;

Tensor RandomImage(int h, int w, Rng& rng) { return RandomTensor({1, 3, h, w}, rng, 0.0, 1.0); }

const ModelBundle& DefaultModel() {
  static const ModelBundle model = ModelBundle::Initialize(CodecConfig{}, 42);
  return model;
}

TEST_CASE("encode geometry") {
  Rng rng(1);
  const ModelBundle& model = DefaultModel();
  CHECK(Encode(model, RandomImage(224, 224, rng)).shape() == Shape{1, 48, 28, 28});
  CHECK(Encode(model, RandomImage(16, 16, rng)).shape() == Shape{1, 48, 2, 2});
  CHECK(Encode(model, RandomImage(17, 30, rng)).shape() == Shape{1, 48, 3, 4});
  SUBCASE("undersized or out-of-range input") {
    CHECK_THROWS_AS(Encode(model, RandomImage(7, 64, rng)), Error);
    Tensor bad = RandomImage(16, 16, rng);
    bad[3] = 1.5f;
    CHECK_THROWS_AS(Encode(model, bad), Error);
    CHECK_THROWS_AS(Encode(model, Tensor({1, 1, 16, 16})), Error);
  }
}

TEST_CASE("encode is deterministic") {
  Rng rng(2);
  const Tensor x = RandomImage(40, 48, rng);
  const Tensor a = Encode(DefaultModel(), x);
  const Tensor b = Encode(DefaultModel(), x);
  CHECK(a.storage() == b.storage());
}

TEST_CASE("quantize") {
  SUBCASE("eval rounds half away from zero") {
    Tensor y({1, 1, 1, 6}, std::vector<float>{1.4f, -1.5f, 1.5f, -0.5f, 0.5f, 2.49f});
    const Tensor q = Quantize(y, QuantizeMode::kEval);
    CHECK(q.storage() == std::vector<float>{1, -2, 2, -1, 1, 2});
  }
  SUBCASE("train noise is bounded and seeded") {
    Rng src(3);
    const Tensor y = RandomTensor({2, 4, 8, 8}, src, -20, 20);
    Rng r1(99), r2(99), r3(100);
    const Tensor a = Quantize(y, QuantizeMode::kTrain, &r1);
    const Tensor b = Quantize(y, QuantizeMode::kTrain, &r2);
    const Tensor c = Quantize(y, QuantizeMode::kTrain, &r3);
    CHECK(a.storage() == b.storage());
    CHECK(a.storage() != c.storage());
    double mean = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
      CHECK(std::abs(a[i] - y[i]) <= 0.5f);
      mean += a[i] - y[i];
    }
    CHECK(std::abs(mean / y.size()) < 0.05);
    CHECK_THROWS_AS(Quantize(y, QuantizeMode::kTrain, nullptr), Error);
  }
  SUBCASE("eval quantization is idempotent") {
    Rng src(4);
    const Tensor y = RandomTensor({1, 8, 5, 5}, src, -100, 100);
    const Tensor q = Quantize(y, QuantizeMode::kEval);
    CHECK(Quantize(q, QuantizeMode::kEval).storage() == q.storage());
  }
}

TEST_CASE("decode contract") {
  Rng rng(5);
  const ModelBundle& model = DefaultModel();
  SUBCASE("untrained round trip has a valid shape and range") {
    const Tensor x = RandomImage(32, 40, rng);
    const LatentCode code = AnalyzeImage(model, x);
    const Tensor y = Decode(model, code);
    CHECK(y.shape() == Shape{1, 3, 32, 40});
    for (float v : y.data()) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
  SUBCASE("48x28x28 latent decodes to a 224x224 image") {
    const Tensor latent = RandomTensor({1, 48, 28, 28}, rng, -2, 2);
    CHECK(Decode(model, Quantize(latent, QuantizeMode::kEval), 224, 224).shape() ==
          Shape{1, 3, 224, 224});
  }
  SUBCASE("fingerprint mismatch refuses to decode") {
    LatentCode code = AnalyzeImage(model, RandomImage(16, 16, rng));
    const ModelBundle other = ModelBundle::Initialize(CodecConfig{}, 43);
    CHECK(other.fingerprint() != model.fingerprint());
    try {
      Decode(other, code);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMismatch);
    }
  }
  SUBCASE("latent geometry mismatch") {
    CHECK_THROWS_AS(Decode(model, Tensor({1, 47, 2, 2}), 16, 16), Error);
  }
}

TEST_CASE("latent code records ranges and dims") {
  Rng rng(6);
  const ModelBundle& model = DefaultModel();
  const LatentCode code = AnalyzeImage(model, RandomImage(21, 35, rng));
  CHECK(code.fingerprint == model.fingerprint());
  CHECK(code.image_height == 21);
  CHECK(code.image_width == 35);
  CHECK(code.padded_height == 24);
  CHECK(code.padded_width == 40);
  CHECK(code.channels == 48);
  CHECK(code.height == 3);
  CHECK(code.width == 5);
  for (int c = 0; c < code.channels; ++c) {
    for (int32_t v : code.channel(c)) {
      CHECK(v >= code.q_min[c]);
      CHECK(v <= code.q_max[c]);
    }
  }
}

TEST_CASE("geometry round trip over [16, 512]") {
  Rng rng(7);
  const ModelBundle model = ModelBundle::Initialize(CodecConfig{8, 8, 3, Activation::kGdn}, 1);
  std::vector<std::pair<int, int>> sizes{{16, 16}, {512, 512}, {16, 512}, {511, 17}};
  for (int i = 0; i < 12; ++i) {
    sizes.emplace_back(16 + static_cast<int>(rng.Below(497)), 16 + static_cast<int>(rng.Below(497)));
  }
  for (auto [h, w] : sizes) {
    const Tensor y = Decode(model, AnalyzeImage(model, RandomImage(h, w, rng)));
    CHECK(y.shape() == Shape{1, 3, h, w});
  }
}

TEST_CASE("relu variant and other stage counts") {
  Rng rng(8);
  for (int stages : {1, 2, 4}) {
    const CodecConfig cfg{6, 5, stages, Activation::kRelu};
    const ModelBundle m = ModelBundle::Initialize(cfg, 2);
    const Tensor x = RandomImage(33, 20, rng);
    const Tensor z = Encode(m, x);
    const int d = 1 << stages;
    CHECK(z.shape() == Shape{1, 6, (33 + d - 1) / d, (20 + d - 1) / d});
    CHECK(Decode(m, AnalyzeImage(m, x)).shape() == Shape{1, 3, 33, 20});
  }
  CHECK_THROWS_AS(ModelBundle::Initialize(CodecConfig{6, 5, 0, Activation::kGdn}, 1), Error);
}

TEST_CASE("model bundle serialization") {
  const ModelBundle& model = DefaultModel();
  const auto bytes = model.ToBytes();
  SUBCASE("save -> load -> save is byte-identical") {
    const auto path = (std::filesystem::temp_directory_path() / "pwsc_model_test.pwgt").string();
    model.Save(path);
    const ModelBundle loaded = ModelBundle::Load(path);
    CHECK(loaded.ToBytes() == bytes);
    CHECK(loaded.fingerprint() == model.fingerprint());
    CHECK(loaded.config() == model.config());
    std::filesystem::remove(path);
  }
  SUBCASE("hash covers every parameter byte") {
    ModelBundle m = ModelBundle::FromBytes(bytes);
    m.params().back().tensor[0] = std::nextafter(m.params().back().tensor[0], 1e9f);
    m.RefreshFingerprint();
    CHECK(m.fingerprint() != model.fingerprint());
  }
  SUBCASE("corruption is detected") {
    auto bad = bytes;
    bad[bad.size() / 2] ^= 1;
    CHECK_THROWS_AS(ModelBundle::FromBytes(bad), Error);
    auto v2 = bytes;
    v2[4] = 2;
    CHECK_THROWS_AS(ModelBundle::FromBytes(v2), Error);
  }
  SUBCASE("weight file layout") {
    const std::vector<NamedTensor> ts{{"a", Tensor({2}, std::vector<float>{1.0f, -2.0f})}};
    const auto w = SerializeWeights(ts);
    // magic, version, count, (len, "a", rank, dim, 2 floats), hash
    CHECK(w.size() == 4 + 1 + 4 + 2 + 1 + 1 + 4 + 8 + 8);
    CHECK(w[9] == 1);
    CHECK(w[11] == 'a');
    const auto back = ParseWeights(w);
    REQUIRE(back.size() == 1);
    CHECK(back[0].name == "a");
    CHECK(back[0].tensor.storage() == ts[0].tensor.storage());
  }
}

TEST_CASE("compress / decompress through the bitstream") {
  Rng rng(9);
  const ModelBundle& model = DefaultModel();
  const Tensor x = RandomImage(48, 40, rng);
  const CompressedImage c = CompressImage(model, x);
  CHECK(c.bpp == doctest::Approx(8.0 * c.bytes.size() / (48 * 40)));
  const LatentCode code = DecodeLatents(model, c.bytes);
  CHECK(code.values == c.code.values);
  const Tensor y = DecompressImage(model, c.bytes);
  CHECK(y.storage() == Decode(model, c.code).storage());
  CHECK(CompressImage(model, x).bytes == c.bytes);

  const ModelBundle other = ModelBundle::Initialize(CodecConfig{}, 7);
  CHECK_THROWS_AS(DecompressImage(other, c.bytes), Error);
}

}  // namespace
}  // namespace pwsc
