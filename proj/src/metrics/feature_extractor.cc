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

#include "pwsc/feature_extractor.h"

#include <cmath>
#include <numeric>
#include <string>

#include "pwsc/error.h"
#include "pwsc/ops.h"
#include "pwsc/rng.h"

namespace pwsc {
namespace {

std::string StageName(int l, const char* what) {
  return "feat." + std::to_string(l) + "." + what;
}

const Tensor* Find(const std::vector<NamedTensor>& ws, const std::string& name) {
  for (const auto& w : ws) {
    if (w.name == name) return &w.tensor;
  }
  return nullptr;
}

}  // namespace

FeatureExtractor FeatureExtractor::Random(const std::vector<int>& channels,
                                          uint64_t seed) {
  PWSC_CHECK_ARG(!channels.empty(), "feature extractor: no stages");
  FeatureExtractor fx;
  Rng rng(seed);
  int in = 3;
  for (int out : channels) {
    PWSC_CHECK_ARG(out > 0, "feature extractor: non-positive channel count");
    Tensor w({out, in, 3, 3});
    const double sd = std::sqrt(2.0 / (in * 9));
    for (float& v : w.data()) v = static_cast<float>(sd * rng.Normal());
    fx.weights_.push_back(std::move(w));
    fx.biases_.emplace_back(Shape{out}, 0.0f);
    fx.channels_.push_back(out);
    in = out;
  }
  fx.alphas_.assign(channels.size(), 1.0 / static_cast<double>(channels.size()));
  return fx;
}

FeatureExtractor FeatureExtractor::Default() {
  return Random({16, 32, 64, 128}, kDefaultSeed);
}

FeatureExtractor FeatureExtractor::FromWeights(const std::vector<NamedTensor>& ws) {
  FeatureExtractor fx;
  int in = 3;
  for (int l = 0;; ++l) {
    const Tensor* w = Find(ws, StageName(l, "weight"));
    if (w == nullptr) break;
    const Tensor* b = Find(ws, StageName(l, "bias"));
    if (b == nullptr || w->rank() != 4 || w->dim(1) != in || w->dim(2) != 3 ||
        w->dim(3) != 3 || b->rank() != 1 || b->dim(0) != w->dim(0)) {
      Fail(ErrorCode::kDataError,
           "feature extractor: stage " + std::to_string(l) + " has malformed weights");
    }
    fx.weights_.push_back(*w);
    fx.biases_.push_back(*b);
    fx.channels_.push_back(w->dim(0));
    in = w->dim(0);
  }
  if (fx.weights_.empty()) Fail(ErrorCode::kDataError, "feature extractor: no stages in weights");
  if (const Tensor* a = Find(ws, "feat.alpha")) {
    if (a->size() != fx.weights_.size()) {
      Fail(ErrorCode::kDataError, "feature extractor: alpha count differs from stage count");
    }
    fx.set_alphas(std::vector<double>(a->data().begin(), a->data().end()));
  } else {
    fx.alphas_.assign(fx.weights_.size(), 1.0 / static_cast<double>(fx.weights_.size()));
  }
  return fx;
}

FeatureExtractor FeatureExtractor::Load(const std::string& path) {
  return FromWeights(LoadWeightFile(path));
}

std::vector<NamedTensor> FeatureExtractor::ToWeights() const {
  std::vector<NamedTensor> out;
  for (int l = 0; l < stages(); ++l) {
    out.push_back({StageName(l, "weight"), weights_[static_cast<size_t>(l)]});
    out.push_back({StageName(l, "bias"), biases_[static_cast<size_t>(l)]});
  }
  Tensor a({stages()});
  for (int l = 0; l < stages(); ++l) a[static_cast<size_t>(l)] = static_cast<float>(alphas_[static_cast<size_t>(l)]);
  out.push_back({"feat.alpha", std::move(a)});
  return out;
}

void FeatureExtractor::Save(const std::string& path) const {
  SaveWeightFile(path, ToWeights());
}

void FeatureExtractor::set_alphas(std::vector<double> alphas) {
  PWSC_CHECK_ARG(alphas.size() == weights_.size(),
                 "feature extractor: need one alpha per stage");
  double s = 0.0;
  for (double a : alphas) {
    PWSC_CHECK_ARG(a >= 0.0, "feature extractor: negative alpha");
    s += a;
  }
  // Weights read back from binary32 files may be off by float rounding.
  PWSC_CHECK_ARG(std::abs(s - 1.0) <= 1e-6, "feature extractor: alphas must sum to 1");
  alphas_ = std::move(alphas);
}

std::vector<Var> FeatureExtractor::Extract(Tape& tape, const Var& image) const {
  PWSC_CHECK_ARG(image.value().rank() == 4 && image.value().dim(1) == 3,
                 "feature extractor: expected N x 3 x H x W, got " +
                     ShapeString(image.shape()));
  Var x = AddChannelBias(Scale(image, 2.0f), tape.Constant(Tensor({3}, -1.0f)));
  std::vector<Var> out;
  for (int l = 0; l < stages(); ++l) {
    x = Conv2d(x, tape.Constant(weights_[static_cast<size_t>(l)]), 2, 1);
    x = Relu(AddChannelBias(x, tape.Constant(biases_[static_cast<size_t>(l)])));
    out.push_back(x);
  }
  return out;
}

std::vector<Tensor> FeatureExtractor::Extract(const Tensor& image) const {
  Tape tape;
  std::vector<Tensor> out;
  for (const Var& v : Extract(tape, tape.Constant(image))) out.push_back(v.value());
  return out;
}

Var FeatureL2(Tape& tape, const Var& a, const Var& b, const FeatureExtractor& extractor) {
  PWSC_CHECK_ARG(a.shape() == b.shape(), "feature_l2: shape mismatch " +
                                             ShapeString(a.shape()) + " vs " +
                                             ShapeString(b.shape()));
  const Var fa = GlobalAvgPool(extractor.Extract(tape, a).back());
  const Var fb = GlobalAvgPool(extractor.Extract(tape, b).back());
  return L2Distance(fa, fb);
}

double FeatureL2(const Tensor& a, const Tensor& b, const FeatureExtractor& extractor) {
  Tape tape;
  return FeatureL2(tape, tape.Constant(a), tape.Constant(b), extractor).value()[0];
}

}  // namespace pwsc
