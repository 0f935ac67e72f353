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

#ifndef PWSC_TRAINING_H_
#define PWSC_TRAINING_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pwsc/autograd.h"
#include "pwsc/codec_model.h"
#include "pwsc/feature_extractor.h"
#include "pwsc/rng.h"
#include "pwsc/tensor.h"

namespace pwsc {

struct TrainConfig {
  double lambda = 0.01;
  double psi = 0.5;        // until psi_switch_epoch
  double psi_late = 0.7;   // from psi_switch_epoch on
  int psi_switch_epoch = 90;
  double lr = 1e-4;
  int batch_size = 4;
  int tile_size = 224;
  int epochs = 150;
  int64_t max_steps = 0;   // 0: run all epochs
  int patience = 5;
  double plateau_factor = 0.5;
  double plateau_rel = 1e-4;
  double min_lr = 1e-6;
  double divergence_factor = 10.0;
  int divergence_epochs = 3;
  uint64_t seed = 1;
  bool augment = true;
  double brightness = 0.1;  // factors drawn from U(1 - x, 1 + x)
  double contrast = 0.1;
  double saturation = 0.1;
  double hue = 0.02;        // turns, drawn from U(-x, x)
  CodecConfig codec;

  void Validate() const;
  double PsiAt(int epoch) const;
};

// Per-step (or averaged) terms of lambda * rate + mse + psi * feature.
struct LossBreakdown {
  double total = 0.0;
  double rate_bpp = 0.0;
  double mse = 0.0;
  double feature = 0.0;
  double lambda = 0.0;
  double psi = 0.0;
  int64_t step = 0;
  int epoch = 0;
  double lr = 0.0;

  // |total - (lambda rate + mse + psi feature)| <= rel * |total|.
  bool Additive(double rel = 1e-6) const;
};

struct LossOptions {
  double lambda = 0.01;
  double psi = 0.5;
  // Test hook: the reconstruction is the input itself.
  bool bypass_decoder = false;
};

struct LossGraph {
  Var total;
  LossBreakdown breakdown;  // step / epoch / lr left at zero
};

// One 1 x 3 x H x W image (H, W multiples of the codec downsampling) through
// noisy quantization, synthesis, rate and feature terms. Non-finite terms
// raise kNumeric naming the component.
LossGraph LossEg(Tape& tape, const CodecGraph& graph, const Tensor& image,
                 const FeatureExtractor& extractor, const LossOptions& options,
                 Rng& rng);

struct AugmentParams {
  bool flip_h = false;
  bool flip_v = false;
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;
  double hue = 0.0;  // turns

  static AugmentParams Sample(Rng& rng, const TrainConfig& config);
};

// Identity parameters return the input unchanged; output is clamped to [0, 1].
Tensor Augment(const Tensor& tile, const AugmentParams& params);
Tensor Augment(const Tensor& tile, Rng& rng, const TrainConfig& config);

struct EpochSummary {
  int epoch = 0;
  int64_t steps = 0;
  double mean_total = 0.0;
  double lr = 0.0;
  double psi = 0.0;
};

struct TrainResult {
  ModelBundle model;
  std::vector<LossBreakdown> history;  // one per optimizer step
  std::vector<EpochSummary> epochs;
  bool diverged = false;
  std::string report;
};

// Called after every epoch; lets callers checkpoint.
using EpochCallback = std::function<void(const ModelBundle&, const EpochSummary&)>;

// Adam on mini-batches of augmented tiles. Each batch entry runs through its
// own tape; gradients and loss terms are averaged over the batch. The learning
// rate is multiplied by plateau_factor (not below min_lr) whenever the best
// epoch loss has not improved by plateau_rel for `patience` epochs. Training
// stops, with diverged set, once the epoch loss exceeds divergence_factor
// times the first epoch's loss for divergence_epochs epochs in a row.
TrainResult Train(const std::vector<Tensor>& tiles, const TrainConfig& config,
                  const FeatureExtractor& extractor, const EpochCallback& on_epoch = {},
                  const ModelBundle* init = nullptr);

// count log-spaced values from 0.001 to 0.1, endpoints exact.
std::vector<double> LambdaGrid(int count);

}  // namespace pwsc

#endif  // PWSC_TRAINING_H_
