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

#ifndef PWSC_CODEC_MODEL_H_
#define PWSC_CODEC_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pwsc/autograd.h"
#include "pwsc/entropy_model.h"
#include "pwsc/rng.h"
#include "pwsc/tensor.h"
#include "pwsc/weight_file.h"

namespace pwsc {

enum class Activation { kGdn = 0, kRelu = 1 };

struct CodecConfig {
  int latent_channels = 48;
  int hidden_channels = 32;
  int stages = 3;  // each a stride-2 5x5 convolution
  Activation activation = Activation::kGdn;

  int downsample() const { return 1 << stages; }
  void Validate() const;
  bool operator==(const CodecConfig&) const = default;
};

// Encoder/decoder/prior parameters plus the config, with the content hash of
// their serialized form as fingerprint. Parameters are kept in a fixed order;
// names follow "enc.<i>.weight", "dec.<i>.gdn.beta", "prior.loc", ...
class ModelBundle {
 public:
  static ModelBundle Initialize(const CodecConfig& config, uint64_t seed);
  static ModelBundle FromBytes(std::span<const uint8_t> bytes);
  static ModelBundle Load(const std::string& path);

  std::vector<uint8_t> ToBytes() const;
  void Save(const std::string& path) const;

  const CodecConfig& config() const { return config_; }
  uint64_t fingerprint() const { return fingerprint_; }

  std::vector<NamedTensor>& params() { return params_; }
  const std::vector<NamedTensor>& params() const { return params_; }
  const Tensor& param(std::string_view name) const;
  FactorizedPrior prior() const;

  // Must be called after parameters change.
  void RefreshFingerprint();

 private:
  CodecConfig config_;
  std::vector<NamedTensor> params_;
  uint64_t fingerprint_ = 0;
};

// The model's forward transforms recorded on a tape. With `trainable` set,
// every parameter is a gradient-tracking leaf, parallel to model.params().
class CodecGraph {
 public:
  CodecGraph(Tape& tape, const ModelBundle& model, bool trainable);

  // Padded image (H, W multiples of 2^stages) -> continuous latent.
  Var Analysis(const Var& image) const;
  // Latent -> reconstruction at padded size, unclamped.
  Var Synthesis(const Var& latent) const;

  const Var& loc() const { return loc_; }
  const Var& log_scale() const { return log_scale_; }
  const std::vector<Var>& params() const { return params_; }

 private:
  struct Stage {
    Var weight, bias, beta, gamma;  // beta/gamma unset on the last stage
  };
  Var Activate(const Var& x, const Stage& s, bool inverse) const;

  CodecConfig config_;
  std::vector<Var> params_;
  std::vector<Stage> encoder_, decoder_;
  Var loc_, log_scale_;
};

// Quantized latent plus the geometry needed to decode it.
struct LatentCode {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<int32_t> values;  // channel-major, raster order within a channel
  int image_height = 0;
  int image_width = 0;
  int padded_height = 0;
  int padded_width = 0;
  uint64_t fingerprint = 0;
  std::vector<int32_t> q_min;  // per channel
  std::vector<int32_t> q_max;

  std::span<const int32_t> channel(int c) const {
    return std::span<const int32_t>(values).subspan(
        static_cast<size_t>(c) * height * width, static_cast<size_t>(height) * width);
  }
  Tensor ToTensor() const;  // 1 x C x h x w
};

enum class QuantizeMode { kTrain, kEval };

// Reflect-pads bottom/right so H and W become multiples of `multiple`.
Tensor PadToMultiple(const Tensor& image, int multiple);

// image: 1 x 3 x H x W in [0, 1] -> continuous latent M x H/2^s x W/2^s
// (after padding to divisibility).
Tensor Encode(const ModelBundle& model, const Tensor& image);

// Train: adds U(-0.5, 0.5) noise drawn from `rng` (required). Eval: rounds
// half away from zero.
Tensor Quantize(const Tensor& latent, QuantizeMode mode, Rng* rng = nullptr);

// Synthesis, crop to out_h x out_w, clamp to [0, 1].
Tensor Decode(const ModelBundle& model, const Tensor& latent, int out_h,
              int out_w);
// Refuses codes produced by a different model.
Tensor Decode(const ModelBundle& model, const LatentCode& code);

// Packages a rounded 1 x C x h x w latent with its geometry and symbol ranges.
LatentCode MakeLatentCode(const ModelBundle& model, const Tensor& rounded,
                          int image_h, int image_w);

// encode -> eval quantize -> LatentCode.
LatentCode AnalyzeImage(const ModelBundle& model, const Tensor& image);

}  // namespace pwsc

#endif  // PWSC_CODEC_MODEL_H_
