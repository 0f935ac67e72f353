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
#include <limits>
#include <vector>

#include "doctest.h"
#include "pwsc/dataset.h"
#include "pwsc/error.h"
#include "pwsc/training.h"
#include "test_util.h"

namespace pwsc {
namespace {

CodecConfig SmallCodec() { return CodecConfig{6, 6, 2, Activation::kGdn}; }

TrainConfig TinyConfig() {
  TrainConfig c;
  c.codec = SmallCodec();
  c.tile_size = 16;
  c.batch_size = 2;
  c.epochs = 3;
  c.lr = 1e-3;
  return c;
}

std::vector<Tensor> TinyTiles(int n, int size = 16) {
  std::vector<Tensor> out;
  for (int i = 0; i < n; ++i) out.push_back(SynthesizeTissue(size, size, 50 + static_cast<uint64_t>(i)));
  return out;
}

const FeatureExtractor& Fx() {
  static const FeatureExtractor fx = FeatureExtractor::Random({4, 8}, 11);
  return fx;
}

LossBreakdown EvalLoss(const ModelBundle& model, const Tensor& img, LossOptions opt, uint64_t seed) {
  Tape tape;
  CodecGraph graph(tape, model, false);
  Rng rng(seed);
  return LossEg(tape, graph, img, Fx(), opt, rng).breakdown;
}

TEST_CASE("loss examples") {
  const ModelBundle model = ModelBundle::Initialize(SmallCodec(), 3);
  const Tensor img = SynthesizeTissue(16, 16, 1);
  SUBCASE("additive and positive") {
    const LossBreakdown b = EvalLoss(model, img, {0.01, 0.5, false}, 1);
    CHECK(b.Additive());
    CHECK(b.rate_bpp > 0.0);
    CHECK(b.mse > 0.0);
    CHECK(b.feature > 0.0);
    CHECK(b.total == doctest::Approx(0.01 * b.rate_bpp + b.mse + 0.5 * b.feature).epsilon(1e-12));
  }
  SUBCASE("psi = 0 is the baseline objective") {
    const LossBreakdown b = EvalLoss(model, img, {0.01, 0.0, false}, 1);
    CHECK(b.total == doctest::Approx(0.01 * b.rate_bpp + b.mse).epsilon(1e-12));
  }
  SUBCASE("identical reconstruction with lambda = 0 costs nothing") {
    const LossBreakdown b = EvalLoss(model, img, {0.0, 0.5, true}, 1);
    CHECK(b.total == 0.0);
    CHECK(b.mse == 0.0);
    CHECK(b.feature == 0.0);
  }
  SUBCASE("doubling psi doubles the feature contribution") {
    const LossBreakdown a = EvalLoss(model, img, {0.01, 0.5, false}, 9);
    const LossBreakdown b = EvalLoss(model, img, {0.01, 1.0, false}, 9);
    CHECK(a.feature == b.feature);
    CHECK(b.total - a.total == doctest::Approx(0.5 * a.feature).epsilon(1e-9));
  }
  SUBCASE("non-finite input aborts with a numeric error") {
    Tensor bad = img;
    bad[5] = std::numeric_limits<float>::quiet_NaN();
    try {
      EvalLoss(model, bad, {0.01, 0.5, false}, 1);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNumeric);
    }
  }
}

// Directional finite differences of the whole objective with the noise fixed
// by the seed. Parameters are perturbed along a random direction; at 96 px
// the ReLU kinks of the feature term stay small.
TEST_CASE("composite objective gradient matches finite differences") {
  Rng rng(21);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const ModelBundle model = ModelBundle::Initialize(SmallCodec(), 100 + static_cast<uint64_t>(trial));
    const Tensor img = SynthesizeTissue(96, 96, 200 + static_cast<uint64_t>(trial));
    const LossOptions opt{0.01, 0.5, false};
    const uint64_t seed = 300 + static_cast<uint64_t>(trial);

    Tape tape;
    CodecGraph graph(tape, model, true);
    Rng noise(seed);
    const LossGraph loss = LossEg(tape, graph, img, Fx(), opt, noise);
    tape.Backward(loss.total);

    std::vector<Tensor> dir;
    double norm = 0.0;
    for (size_t i = 0; i < model.params().size(); ++i) {
      dir.push_back(testing::RandomTensor(model.params()[i].tensor.shape(), rng));
      for (float v : dir.back().data()) norm += static_cast<double>(v) * v;
    }
    double analytic = 0.0;
    for (size_t i = 0; i < dir.size(); ++i) {
      Tensor& d = dir[i];
      for (size_t j = 0; j < d.size(); ++j) d[j] = static_cast<float>(d[j] / std::sqrt(norm));
      const Tensor& g = graph.params()[i].grad();
      for (size_t j = 0; j < g.size(); ++j) analytic += static_cast<double>(g[j]) * d[j];
    }
    auto shifted = [&](double t) {
      ModelBundle m = model;
      for (size_t i = 0; i < m.params().size(); ++i) {
        Tensor& p = m.params()[i].tensor;
        for (size_t j = 0; j < p.size(); ++j) p[j] += static_cast<float>(t * dir[i][j]);
      }
      return EvalLoss(m, img, opt, seed).total;
    };
    const double h = 1e-4;
    const double fd = (shifted(h) - shifted(-h)) / (2 * h);
    // Floor: binary32 loss resolution over 2h.
    if (std::abs(analytic - fd) <= 1e-2 * std::max(std::abs(fd), 0.03)) ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("every parameter receives gradient within 10 steps") {
  const ModelBundle model = ModelBundle::Initialize(CodecConfig{}, 5);
  Rng rng(6);
  std::vector<bool> seen(model.params().size(), false);
  for (int step = 0; step < 10; ++step) {
    Tape tape;
    CodecGraph graph(tape, model, true);
    const Tensor img = testing::RandomTensor({1, 3, 32, 32}, rng, 0, 1);
    tape.Backward(LossEg(tape, graph, img, FeatureExtractor::Default(), {0.01, 0.5, false}, rng).total);
    for (size_t i = 0; i < seen.size(); ++i) {
      for (float g : graph.params()[i].grad().data()) seen[i] = seen[i] || g != 0.0f;
    }
  }
  for (size_t i = 0; i < seen.size(); ++i) {
    INFO(model.params()[i].name);
    CHECK(seen[i]);
  }
}

TEST_CASE("augment") {
  const Tensor tile = SynthesizeTissue(24, 24, 3);
  SUBCASE("identity draws") {
    CHECK(Augment(tile, AugmentParams{}).storage() == tile.storage());
    TrainConfig c;
    c.brightness = c.contrast = c.saturation = c.hue = 0.0;
    Rng rng(1);
    int identical = 0;
    for (int i = 0; i < 20; ++i) {
      const AugmentParams p = AugmentParams::Sample(rng, c);
      if (!p.flip_h && !p.flip_v) {
        CHECK(Augment(tile, p).storage() == tile.storage());
        ++identical;
      }
    }
    CHECK(identical > 0);
  }
  SUBCASE("double flip is the identity") {
    AugmentParams p;
    p.flip_h = true;
    CHECK(Augment(Augment(tile, p), p).storage() == tile.storage());
    p.flip_v = true;
    CHECK(Augment(Augment(tile, p), p).storage() == tile.storage());
    CHECK(Augment(tile, p).at(0, 1, 0, 0) == tile.at(0, 1, 23, 23));
  }
  SUBCASE("always within [0, 1]") {
    TrainConfig c;
    c.brightness = c.contrast = c.saturation = 0.9;
    c.hue = 0.5;
    Rng rng(2);
    for (int i = 0; i < 50; ++i) {
      const Tensor out = Augment(tile, rng, c);
      for (float v : out.data()) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
      }
    }
  }
}

TEST_CASE("psi schedule and lambda grid") {
  TrainConfig c;
  CHECK(c.PsiAt(89) == 0.5);
  CHECK(c.PsiAt(90) == 0.7);
  CHECK(c.lr == 1e-4);
  CHECK(c.batch_size == 4);
  CHECK(c.tile_size == 224);

  TrainConfig t = TinyConfig();
  t.batch_size = 1;
  t.epochs = 92;
  t.augment = false;
  const auto r = Train(TinyTiles(1), t, Fx());
  REQUIRE(r.history.size() == 92);
  CHECK(r.history[89].psi == 0.5);
  CHECK(r.history[90].psi == 0.7);
  CHECK(r.epochs[90].psi == 0.7);

  CHECK(LambdaGrid(2) == std::vector<double>{0.001, 0.1});
  const auto g3 = LambdaGrid(3);
  CHECK(g3[0] == 0.001);
  CHECK(g3[1] == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(g3[2] == 0.1);
  const auto g7 = LambdaGrid(7);
  for (size_t i = 1; i < g7.size(); ++i) CHECK(g7[i] > g7[i - 1]);
  CHECK_THROWS_AS(LambdaGrid(1), Error);
}

TEST_CASE("training is seeded and deterministic") {
  const auto tiles = TinyTiles(4);
  const TrainConfig c = TinyConfig();
  const TrainResult a = Train(tiles, c, Fx());
  const TrainResult b = Train(tiles, c, Fx());
  REQUIRE(a.history.size() == 6);
  REQUIRE(b.history.size() == a.history.size());
  for (size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].total == b.history[i].total);
    CHECK(a.history[i].Additive());
  }
  CHECK(a.model.ToBytes() == b.model.ToBytes());
  TrainConfig other = c;
  other.seed = 2;
  CHECK(Train(tiles, other, Fx()).history[0].total != a.history[0].total);
}

TEST_CASE("plateau halving, step limit, divergence") {
  const auto tiles = TinyTiles(2);
  SUBCASE("learning rate halves after `patience` stale epochs") {
    TrainConfig c = TinyConfig();
    c.epochs = 7;
    c.patience = 2;
    c.plateau_rel = 0.9;  // never counts as an improvement
    const auto r = Train(tiles, c, Fx());
    CHECK(r.epochs[0].lr == 1e-3);
    CHECK(r.epochs[2].lr == 1e-3);
    CHECK(r.epochs[3].lr == 5e-4);
    CHECK(r.epochs[5].lr == 2.5e-4);
  }
  SUBCASE("max steps") {
    TrainConfig c = TinyConfig();
    c.epochs = 100;
    c.max_steps = 5;
    CHECK(Train(tiles, c, Fx()).history.size() == 5);
  }
  SUBCASE("divergence aborts with a report") {
    TrainConfig c = TinyConfig();
    c.epochs = 10;
    c.divergence_factor = 1e-9;
    const auto r = Train(tiles, c, Fx());
    CHECK(r.diverged);
    CHECK(r.epochs.size() == 3);
    CHECK(r.report.find("diverged") != std::string::npos);
  }
  SUBCASE("bad inputs") {
    TrainConfig c = TinyConfig();
    CHECK_THROWS_AS(Train({}, c, Fx()), Error);
    CHECK_THROWS_AS(Train(TinyTiles(1, 24), c, Fx()), Error);
    c.lambda = 0.0;
    CHECK_THROWS_AS(Train(tiles, c, Fx()), Error);
  }
  SUBCASE("epoch callback") {
    TrainConfig c = TinyConfig();
    int calls = 0;
    Train(tiles, c, Fx(), [&](const ModelBundle& m, const EpochSummary& s) {
      CHECK(s.epoch == calls);
      CHECK(m.fingerprint() != 0);
      ++calls;
    });
    CHECK(calls == 3);
  }
}

}  // namespace
}  // namespace pwsc
