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

#include "pwsc/training.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "pwsc/adam.h"
#include "pwsc/entropy_model.h"
#include "pwsc/error.h"
#include "pwsc/ops.h"

namespace pwsc {
namespace {

void CheckTerm(double v, const char* name, const LossBreakdown& b) {
  if (std::isfinite(v)) return;
  std::ostringstream os;
  os << "loss: non-finite " << name << " (rate_bpp=" << b.rate_bpp << " mse=" << b.mse
     << " feature=" << b.feature << " lambda=" << b.lambda << " psi=" << b.psi << ")";
  Fail(ErrorCode::kNumeric, os.str());
}

double Luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

}  // namespace

void TrainConfig::Validate() const {
  PWSC_CHECK_ARG(lambda > 0.0, "train: lambda must be positive");
  PWSC_CHECK_ARG(psi >= 0.0 && psi_late >= 0.0, "train: psi must be non-negative");
  PWSC_CHECK_ARG(lr > 0.0, "train: learning rate must be positive");
  PWSC_CHECK_ARG(batch_size >= 1, "train: batch size must be at least 1");
  PWSC_CHECK_ARG(epochs >= 1, "train: need at least one epoch");
  PWSC_CHECK_ARG(max_steps >= 0, "train: max_steps must be non-negative");
  PWSC_CHECK_ARG(patience >= 1, "train: patience must be at least 1");
  PWSC_CHECK_ARG(plateau_factor > 0.0 && plateau_factor < 1.0,
                 "train: plateau factor must lie in (0, 1)");
  PWSC_CHECK_ARG(brightness >= 0 && contrast >= 0 && saturation >= 0 && hue >= 0,
                 "train: jitter magnitudes must be non-negative");
  codec.Validate();
  PWSC_CHECK_ARG(tile_size >= codec.downsample() && tile_size % codec.downsample() == 0,
                 "train: tile size must be a multiple of 2^stages");
}

double TrainConfig::PsiAt(int epoch) const { return epoch < psi_switch_epoch ? psi : psi_late; }

bool LossBreakdown::Additive(double rel) const {
  const double sum = lambda * rate_bpp + mse + psi * feature;
  return std::abs(total - sum) <= rel * std::max(std::abs(total), 1e-300);
}

LossGraph LossEg(Tape& tape, const CodecGraph& graph, const Tensor& image,
                 const FeatureExtractor& extractor, const LossOptions& options, Rng& rng) {
  PWSC_CHECK_ARG(image.rank() == 4 && image.dim(0) == 1 && image.dim(1) == 3,
                 "loss: expected 1 x 3 x H x W, got " + ShapeString(image.shape()));
  PWSC_CHECK_ARG(options.lambda >= 0.0 && options.psi >= 0.0, "loss: negative weight");
  const Var x = tape.Constant(image);
  const Var y = graph.Analysis(x);
  const Tensor noisy = Quantize(y.value(), QuantizeMode::kTrain, &rng);
  Tensor delta(noisy.shape());
  for (size_t i = 0; i < noisy.size(); ++i) delta[i] = noisy[i] - y.value()[i];
  const Var y_tilde = Add(y, tape.Constant(std::move(delta)));

  const Var x_hat = options.bypass_decoder ? x : graph.Synthesis(y_tilde);
  const double pixels = static_cast<double>(image.dim(2)) * image.dim(3);
  const Var rate = Scale(RateBits(y_tilde, graph.loc(), graph.log_scale()),
                         static_cast<float>(1.0 / pixels));
  const Var mse = MseLoss(x_hat, x);
  const Var feat = FeatureL2(tape, x, x_hat, extractor);

  LossGraph out;
  LossBreakdown& b = out.breakdown;
  b.lambda = options.lambda;
  b.psi = options.psi;
  b.rate_bpp = rate.value()[0];
  b.mse = mse.value()[0];
  b.feature = feat.value()[0];
  CheckTerm(b.rate_bpp, "rate", b);
  CheckTerm(b.mse, "mse", b);
  CheckTerm(b.feature, "feature term", b);
  b.total = b.lambda * b.rate_bpp + b.mse + b.psi * b.feature;
  out.total = WeightedSum({rate, mse, feat}, {static_cast<float>(options.lambda), 1.0f,
                                              static_cast<float>(options.psi)});
  return out;
}

AugmentParams AugmentParams::Sample(Rng& rng, const TrainConfig& c) {
  AugmentParams p;
  p.flip_h = rng.Bernoulli(0.5);
  p.flip_v = rng.Bernoulli(0.5);
  p.brightness = rng.Uniform(1.0 - c.brightness, 1.0 + c.brightness);
  p.contrast = rng.Uniform(1.0 - c.contrast, 1.0 + c.contrast);
  p.saturation = rng.Uniform(1.0 - c.saturation, 1.0 + c.saturation);
  p.hue = rng.Uniform(-c.hue, c.hue);
  return p;
}

Tensor Augment(const Tensor& tile, const AugmentParams& p) {
  PWSC_CHECK_ARG(tile.rank() == 4 && tile.dim(0) == 1 && tile.dim(1) == 3,
                 "augment: expected 1 x 3 x H x W, got " + ShapeString(tile.shape()));
  const int h = tile.dim(2), w = tile.dim(3);
  const size_t n = static_cast<size_t>(h) * w;
  Tensor out(tile.shape());
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int sy = p.flip_v ? h - 1 - y : y, sx = p.flip_h ? w - 1 - x : x;
        out.at(0, c, y, x) = tile.at(0, c, sy, sx);
      }
  float* r = out.data().data();
  float* g = r + n;
  float* b = g + n;
  if (p.brightness != 1.0) {
    for (float& v : out.data()) v = static_cast<float>(v * p.brightness);
  }
  if (p.contrast != 1.0) {
    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) mean += Luma(r[i], g[i], b[i]);
    mean /= static_cast<double>(n);
    for (float& v : out.data()) v = static_cast<float>((v - mean) * p.contrast + mean);
  }
  if (p.saturation != 1.0) {
    for (size_t i = 0; i < n; ++i) {
      const double l = Luma(r[i], g[i], b[i]);
      r[i] = static_cast<float>((r[i] - l) * p.saturation + l);
      g[i] = static_cast<float>((g[i] - l) * p.saturation + l);
      b[i] = static_cast<float>((b[i] - l) * p.saturation + l);
    }
  }
  if (p.hue != 0.0) {
    // Rotation of the YIQ chroma plane.
    const double th = 2.0 * std::numbers::pi * p.hue, cs = std::cos(th), sn = std::sin(th);
    for (size_t i = 0; i < n; ++i) {
      const double yy = Luma(r[i], g[i], b[i]);
      const double ii = 0.596 * r[i] - 0.274 * g[i] - 0.322 * b[i];
      const double qq = 0.211 * r[i] - 0.523 * g[i] + 0.312 * b[i];
      const double i2 = ii * cs - qq * sn, q2 = ii * sn + qq * cs;
      r[i] = static_cast<float>(yy + 0.956 * i2 + 0.621 * q2);
      g[i] = static_cast<float>(yy - 0.272 * i2 - 0.647 * q2);
      b[i] = static_cast<float>(yy - 1.106 * i2 + 1.703 * q2);
    }
  }
  for (float& v : out.data()) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

Tensor Augment(const Tensor& tile, Rng& rng, const TrainConfig& config) {
  return Augment(tile, AugmentParams::Sample(rng, config));
}

TrainResult Train(const std::vector<Tensor>& tiles, const TrainConfig& config,
                  const FeatureExtractor& extractor, const EpochCallback& on_epoch,
                  const ModelBundle* init) {
  config.Validate();
  PWSC_CHECK_ARG(!tiles.empty(), "train: empty training set");
  for (const Tensor& t : tiles) {
    PWSC_CHECK_ARG(t.shape() == Shape({1, 3, config.tile_size, config.tile_size}),
                   "train: tile of shape " + ShapeString(t.shape()) + ", expected 1x3x" +
                       std::to_string(config.tile_size) + "x" + std::to_string(config.tile_size));
  }
  Rng rng(config.seed);
  TrainResult result{init ? *init : ModelBundle::Initialize(config.codec, rng.NextU64()), {}, {}, false, ""};
  ModelBundle& model = result.model;
  PWSC_CHECK_ARG(model.config() == config.codec, "train: initial model has a different config");

  AdamState adam;
  AdamOptions opt;
  opt.lr = config.lr;
  std::vector<size_t> order(tiles.size());
  std::iota(order.begin(), order.end(), 0);

  int64_t step = 0;
  double best = 0.0, first_epoch = 0.0;
  int stale = 0, diverging = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.max_steps > 0 && step >= config.max_steps) break;
    const double psi = config.PsiAt(epoch);
    // Fisher-Yates with the training rng.
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.Below(i)]);

    double epoch_total = 0.0;
    int64_t epoch_steps = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
      if (config.max_steps > 0 && step >= config.max_steps) break;
      const size_t end = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
      const double inv = 1.0 / static_cast<double>(end - start);

      std::vector<Tensor> grads;
      LossBreakdown mean;
      for (size_t k = start; k < end; ++k) {
        const Tensor& src = tiles[order[k]];
        const Tensor img = config.augment ? Augment(src, rng, config) : src;
        Tape tape;
        CodecGraph graph(tape, model, /*trainable=*/true);
        const LossGraph loss = LossEg(tape, graph, img, extractor, {config.lambda, psi, false}, rng);
        tape.Backward(loss.total);
        if (grads.empty()) {
          for (const Var& p : graph.params()) grads.emplace_back(p.shape(), 0.0f);
        }
        for (size_t i = 0; i < grads.size(); ++i) {
          const Tensor& g = graph.params()[i].grad();
          for (size_t j = 0; j < g.size(); ++j) grads[i][j] += static_cast<float>(g[j] * inv);
        }
        mean.rate_bpp += loss.breakdown.rate_bpp * inv;
        mean.mse += loss.breakdown.mse * inv;
        mean.feature += loss.breakdown.feature * inv;
      }
      for (const Tensor& g : grads) {
        if (!g.AllFinite()) {
          Fail(ErrorCode::kNumeric, "train: non-finite gradient at step " + std::to_string(step));
        }
      }
      std::vector<Tensor> params;
      params.reserve(model.params().size());
      for (auto& nt : model.params()) params.push_back(std::move(nt.tensor));
      AdamUpdate(params, grads, adam, opt);
      for (size_t i = 0; i < params.size(); ++i) model.params()[i].tensor = std::move(params[i]);

      mean.lambda = config.lambda;
      mean.psi = psi;
      mean.total = mean.lambda * mean.rate_bpp + mean.mse + mean.psi * mean.feature;
      mean.step = step;
      mean.epoch = epoch;
      mean.lr = opt.lr;
      result.history.push_back(mean);
      epoch_total += mean.total;
      ++epoch_steps;
      ++step;
    }
    model.RefreshFingerprint();

    EpochSummary summary{epoch, epoch_steps, epoch_total / std::max<int64_t>(epoch_steps, 1), opt.lr, psi};
    result.epochs.push_back(summary);
    if (on_epoch) on_epoch(model, summary);

    if (epoch == 0) {
      first_epoch = best = summary.mean_total;
    } else if (summary.mean_total < best * (1.0 - config.plateau_rel)) {
      best = summary.mean_total;
      stale = 0;
    } else if (++stale >= config.patience) {
      opt.lr = std::max(config.min_lr, opt.lr * config.plateau_factor);
      stale = 0;
    }
    diverging = summary.mean_total > config.divergence_factor * first_epoch ? diverging + 1 : 0;
    if (diverging >= config.divergence_epochs) {
      std::ostringstream os;
      os << "train: diverged at epoch " << epoch << ": loss " << summary.mean_total
         << " exceeded " << config.divergence_factor << "x the first epoch (" << first_epoch
         << ") for " << diverging << " epochs";
      result.diverged = true;
      result.report = os.str();
      break;
    }
  }
  model.RefreshFingerprint();
  return result;
}

std::vector<double> LambdaGrid(int count) {
  PWSC_CHECK_ARG(count >= 2, "lambda grid: need at least 2 values");
  std::vector<double> out;
  for (int i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / (count - 1);
    out.push_back(std::pow(10.0, -3.0 + 2.0 * t));
  }
  out.front() = 0.001;
  out.back() = 0.1;
  return out;
}

}  // namespace pwsc
