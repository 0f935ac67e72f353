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

#include "pwsc/codec_model.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pwsc/byte_io.h"
#include "pwsc/error.h"
#include "pwsc/ops.h"

namespace pwsc {
namespace {

constexpr int kKernel = 5;
constexpr int kStride = 2;
constexpr int kPad = 2;
constexpr const char* kConfigName = "codec.config";

std::string StageName(const char* side, int i, const char* field) {
  return std::string(side) + "." + std::to_string(i) + "." + field;
}

Tensor UniformTensor(const Shape& shape, double bound, Rng& rng) {
  Tensor t(shape);
  for (float& v : t.data()) v = static_cast<float>(rng.Uniform(-bound, bound));
  return t;
}

// Raw GDN gamma; the effective value is raw^2, so this starts at
// 0.1 on the diagonal and 1e-3 elsewhere.
Tensor InitialGdnGamma(int channels) {
  Tensor gamma({channels, channels}, std::sqrt(1e-3f));
  for (int i = 0; i < channels; ++i) {
    gamma[static_cast<size_t>(i) * channels + i] = std::sqrt(0.1f);
  }
  return gamma;
}

CodecConfig ConfigFromTensor(const Tensor& t) {
  if (t.size() != 4) Fail(ErrorCode::kDataError, "model: malformed codec.config");
  CodecConfig c;
  c.latent_channels = static_cast<int>(t[0]);
  c.hidden_channels = static_cast<int>(t[1]);
  c.stages = static_cast<int>(t[2]);
  const int act = static_cast<int>(t[3]);
  if (act != 0 && act != 1) Fail(ErrorCode::kDataError, "model: unknown activation");
  c.activation = static_cast<Activation>(act);
  c.Validate();
  return c;
}

Tensor ConfigToTensor(const CodecConfig& c) {
  return Tensor({4}, std::vector<float>{static_cast<float>(c.latent_channels),
                                        static_cast<float>(c.hidden_channels),
                                        static_cast<float>(c.stages),
                                        static_cast<float>(static_cast<int>(c.activation))});
}

// Expected parameter names and shapes, in storage order.
std::vector<std::pair<std::string, Shape>> ParamLayout(const CodecConfig& c) {
  std::vector<std::pair<std::string, Shape>> out;
  const bool gdn = c.activation == Activation::kGdn;
  for (int i = 0; i < c.stages; ++i) {
    const int in = i == 0 ? 3 : c.hidden_channels;
    const int outc = i == c.stages - 1 ? c.latent_channels : c.hidden_channels;
    out.push_back({StageName("enc", i, "weight"), {outc, in, kKernel, kKernel}});
    out.push_back({StageName("enc", i, "bias"), {outc}});
    if (i != c.stages - 1 && gdn) {
      out.push_back({StageName("enc", i, "gdn.beta"), {outc}});
      out.push_back({StageName("enc", i, "gdn.gamma"), {outc, outc}});
    }
  }
  for (int i = 0; i < c.stages; ++i) {
    const int in = i == 0 ? c.latent_channels : c.hidden_channels;
    const int outc = i == c.stages - 1 ? 3 : c.hidden_channels;
    out.push_back({StageName("dec", i, "weight"), {in, outc, kKernel, kKernel}});
    out.push_back({StageName("dec", i, "bias"), {outc}});
    if (i != c.stages - 1 && gdn) {
      out.push_back({StageName("dec", i, "gdn.beta"), {outc}});
      out.push_back({StageName("dec", i, "gdn.gamma"), {outc, outc}});
    }
  }
  out.push_back({"prior.loc", {c.latent_channels}});
  out.push_back({"prior.log_scale", {c.latent_channels}});
  return out;
}

}  // namespace

void CodecConfig::Validate() const {
  PWSC_CHECK_ARG(stages >= 1 && stages <= 8, "codec config: stages must be in [1, 8]");
  PWSC_CHECK_ARG(latent_channels >= 1 && hidden_channels >= 1,
                 "codec config: channel counts must be positive");
}

ModelBundle ModelBundle::Initialize(const CodecConfig& config, uint64_t seed) {
  config.Validate();
  Rng rng(seed);
  ModelBundle m;
  m.config_ = config;
  for (const auto& [name, shape] : ParamLayout(config)) {
    Tensor value;
    if (name.ends_with(".weight")) {
      const bool enc = name.starts_with("enc");
      const int fan_in = enc ? shape[1] * kKernel * kKernel
                             : shape[0] * kKernel * kKernel / (kStride * kStride);
      value = UniformTensor(shape, 1.0 / std::sqrt(fan_in), rng);
    } else if (name.ends_with("gdn.beta")) {
      value = Tensor(shape, 1.0f);
    } else if (name.ends_with("gdn.gamma")) {
      value = InitialGdnGamma(shape[0]);
    } else if (name == StageName("dec", config.stages - 1, "bias")) {
      value = Tensor(shape, 0.5f);  // start reconstructions at mid-gray
    } else {
      value = Tensor(shape, 0.0f);
    }
    m.params_.push_back({name, std::move(value)});
  }
  m.RefreshFingerprint();
  return m;
}

std::vector<uint8_t> ModelBundle::ToBytes() const {
  std::vector<NamedTensor> all;
  all.reserve(params_.size() + 1);
  all.push_back({kConfigName, ConfigToTensor(config_)});
  all.insert(all.end(), params_.begin(), params_.end());
  return SerializeWeights(all);
}

ModelBundle ModelBundle::FromBytes(std::span<const uint8_t> bytes) {
  std::vector<NamedTensor> all = ParseWeights(bytes);
  if (all.empty() || all[0].name != kConfigName) {
    Fail(ErrorCode::kDataError, "model: weight file has no codec.config entry");
  }
  ModelBundle m;
  m.config_ = ConfigFromTensor(all[0].tensor);
  const auto layout = ParamLayout(m.config_);
  if (all.size() != layout.size() + 1) {
    Fail(ErrorCode::kDataError, "model: expected " + std::to_string(layout.size()) +
                                    " parameter tensors, found " +
                                    std::to_string(all.size() - 1));
  }
  for (size_t i = 0; i < layout.size(); ++i) {
    NamedTensor& nt = all[i + 1];
    if (nt.name != layout[i].first || nt.tensor.shape() != layout[i].second) {
      Fail(ErrorCode::kDataError, "model: unexpected tensor " + nt.name + " " +
                                      ShapeString(nt.tensor.shape()) + ", wanted " +
                                      layout[i].first + " " +
                                      ShapeString(layout[i].second));
    }
    m.params_.push_back(std::move(nt));
  }
  m.fingerprint_ = WeightFileHash(bytes);
  return m;
}

ModelBundle ModelBundle::Load(const std::string& path) {
  return FromBytes(ReadFileBytes(path));
}

void ModelBundle::Save(const std::string& path) const { WriteFileBytes(path, ToBytes()); }

const Tensor& ModelBundle::param(std::string_view name) const {
  for (const NamedTensor& nt : params_) {
    if (nt.name == name) return nt.tensor;
  }
  Fail(ErrorCode::kInvalidArgument, "model: no parameter named " + std::string(name));
}

FactorizedPrior ModelBundle::prior() const {
  FactorizedPrior p;
  const Tensor& loc = param("prior.loc");
  const Tensor& ls = param("prior.log_scale");
  p.loc.assign(loc.data().begin(), loc.data().end());
  p.log_scale.assign(ls.data().begin(), ls.data().end());
  return p;
}

void ModelBundle::RefreshFingerprint() { fingerprint_ = WeightFileHash(ToBytes()); }

CodecGraph::CodecGraph(Tape& tape, const ModelBundle& model, bool trainable)
    : config_(model.config()) {
  for (const NamedTensor& nt : model.params()) {
    params_.push_back(tape.Leaf(nt.tensor, trainable));
  }
  size_t idx = 0;
  const bool gdn = config_.activation == Activation::kGdn;
  auto take_side = [&](std::vector<Stage>& side) {
    for (int i = 0; i < config_.stages; ++i) {
      Stage s;
      s.weight = params_[idx++];
      s.bias = params_[idx++];
      if (i != config_.stages - 1 && gdn) {
        s.beta = NonnegativeReparam(params_[idx++], kGdnBetaMin);
        s.gamma = NonnegativeReparam(params_[idx++], 0.0f);
      }
      side.push_back(s);
    }
  };
  take_side(encoder_);
  take_side(decoder_);
  loc_ = params_[idx++];
  log_scale_ = params_[idx++];
}

Var CodecGraph::Activate(const Var& x, const Stage& s, bool inverse) const {
  if (config_.activation == Activation::kRelu) return Relu(x);
  return Gdn(x, s.beta, s.gamma, inverse);
}

Var CodecGraph::Analysis(const Var& image) const {
  const int d = config_.downsample();
  PWSC_CHECK_ARG(image.shape().size() == 4 && image.shape()[1] == 3,
                 "encode: expected N x 3 x H x W, got " + ShapeString(image.shape()));
  PWSC_CHECK_ARG(image.shape()[2] % d == 0 && image.shape()[3] % d == 0,
                 "encode: padded size must be a multiple of " + std::to_string(d));
  Var x = image;
  for (int i = 0; i < config_.stages; ++i) {
    const Stage& s = encoder_[static_cast<size_t>(i)];
    x = AddChannelBias(Conv2d(ReflectPad(x, kPad), s.weight, kStride, 0), s.bias);
    if (i != config_.stages - 1) x = Activate(x, s, /*inverse=*/false);
  }
  return x;
}

Var CodecGraph::Synthesis(const Var& latent) const {
  PWSC_CHECK_ARG(latent.shape().size() == 4 &&
                     latent.shape()[1] == config_.latent_channels,
                 "decode: latent geometry " + ShapeString(latent.shape()) +
                     " does not match the model's " +
                     std::to_string(config_.latent_channels) + " channels");
  Var x = latent;
  for (int i = 0; i < config_.stages; ++i) {
    const Stage& s = decoder_[static_cast<size_t>(i)];
    x = AddChannelBias(Deconv2d(x, s.weight, kStride, kPad, kStride - 1), s.bias);
    if (i != config_.stages - 1) x = Activate(x, s, /*inverse=*/true);
  }
  return x;
}

Tensor LatentCode::ToTensor() const {
  Tensor t({1, channels, height, width});
  for (size_t i = 0; i < values.size(); ++i) t[i] = static_cast<float>(values[i]);
  return t;
}

Tensor PadToMultiple(const Tensor& image, int multiple) {
  PWSC_CHECK_ARG(image.rank() == 4, "pad: expected N x C x H x W");
  const int n = image.dim(0), c = image.dim(1), h = image.dim(2), w = image.dim(3);
  const int ph = (h + multiple - 1) / multiple * multiple;
  const int pw = (w + multiple - 1) / multiple * multiple;
  if (ph == h && pw == w) return image;
  auto reflect = [](int i, int size) {
    if (size == 1) return 0;
    const int period = 2 * (size - 1);
    i %= period;
    return i < size ? i : period - i;
  };
  Tensor out({n, c, ph, pw});
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x)
          out.at(b, ch, y, x) = image.at(b, ch, reflect(y, h), reflect(x, w));
  return out;
}

Tensor Encode(const ModelBundle& model, const Tensor& image) {
  const int d = model.config().downsample();
  PWSC_CHECK_ARG(image.rank() == 4 && image.dim(1) == 3,
                 "encode: expected N x 3 x H x W, got " + ShapeString(image.shape()));
  if (image.dim(2) < d || image.dim(3) < d) {
    Fail(ErrorCode::kInvalidArgument,
         "encode: image " + std::to_string(image.dim(2)) + "x" +
             std::to_string(image.dim(3)) + " is smaller than " + std::to_string(d) +
             "x" + std::to_string(d));
  }
  for (float v : image.data()) {
    PWSC_CHECK_ARG(v >= 0.0f && v <= 1.0f, "encode: pixel values must lie in [0, 1]");
  }
  Tape tape;
  CodecGraph graph(tape, model, /*trainable=*/false);
  return graph.Analysis(tape.Constant(PadToMultiple(image, d))).value();
}

Tensor Quantize(const Tensor& latent, QuantizeMode mode, Rng* rng) {
  Tensor out = latent;
  if (mode == QuantizeMode::kTrain) {
    PWSC_CHECK_ARG(rng != nullptr, "quantize: training mode needs a seeded rng");
    for (float& v : out.data()) {
      const float y = v;
      v += static_cast<float>(rng->Uniform(-0.5, 0.5));
      // Float rounding of the sum must not push the offset past 0.5.
      while (std::abs(static_cast<double>(v) - y) > 0.5) v = std::nextafter(v, y);
    }
  } else {
    for (float& v : out.data()) v = std::round(v);
  }
  return out;
}

Tensor Decode(const ModelBundle& model, const Tensor& latent, int out_h, int out_w) {
  Tape tape;
  CodecGraph graph(tape, model, /*trainable=*/false);
  const Tensor& full = graph.Synthesis(tape.Constant(latent)).value();
  const int n = full.dim(0), c = full.dim(1);
  PWSC_CHECK_ARG(out_h <= full.dim(2) && out_w <= full.dim(3),
                 "decode: requested size exceeds the reconstruction");
  Tensor out({n, c, out_h, out_w});
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x)
          out.at(b, ch, y, x) = std::clamp(full.at(b, ch, y, x), 0.0f, 1.0f);
  return out;
}

Tensor Decode(const ModelBundle& model, const LatentCode& code) {
  if (code.fingerprint != model.fingerprint()) {
    Fail(ErrorCode::kMismatch, "decode: latent was produced by a different model");
  }
  const int d = model.config().downsample();
  if (code.channels != model.config().latent_channels ||
      code.height * d != code.padded_height || code.width * d != code.padded_width) {
    Fail(ErrorCode::kMismatch, "decode: latent geometry does not match the model");
  }
  return Decode(model, code.ToTensor(), code.image_height, code.image_width);
}

LatentCode MakeLatentCode(const ModelBundle& model, const Tensor& rounded,
                          int image_h, int image_w) {
  PWSC_CHECK_ARG(rounded.rank() == 4 && rounded.dim(0) == 1,
                 "latent code: expected a single 1 x C x h x w latent");
  const int d = model.config().downsample();
  LatentCode code;
  code.channels = rounded.dim(1);
  code.height = rounded.dim(2);
  code.width = rounded.dim(3);
  code.image_height = image_h;
  code.image_width = image_w;
  code.padded_height = code.height * d;
  code.padded_width = code.width * d;
  code.fingerprint = model.fingerprint();
  code.values.resize(rounded.size());
  code.q_min.assign(static_cast<size_t>(code.channels), std::numeric_limits<int32_t>::max());
  code.q_max.assign(static_cast<size_t>(code.channels), std::numeric_limits<int32_t>::min());
  const size_t plane = static_cast<size_t>(code.height) * code.width;
  for (size_t i = 0; i < rounded.size(); ++i) {
    const float v = rounded[i];
    PWSC_CHECK_ARG(v == std::round(v) && std::fabs(v) < 1e9f,
                   "latent code: values must be rounded integers");
    const int32_t q = static_cast<int32_t>(v);
    code.values[i] = q;
    const size_t c = i / plane;
    code.q_min[c] = std::min(code.q_min[c], q);
    code.q_max[c] = std::max(code.q_max[c], q);
  }
  return code;
}

LatentCode AnalyzeImage(const ModelBundle& model, const Tensor& image) {
  const Tensor rounded = Quantize(Encode(model, image), QuantizeMode::kEval);
  return MakeLatentCode(model, rounded, image.dim(2), image.dim(3));
}

}  // namespace pwsc
