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

#ifndef PWSC_FEATURE_EXTRACTOR_H_
#define PWSC_FEATURE_EXTRACTOR_H_

#include <cstdint>
#include <string>
#include <vector>

#include "pwsc/autograd.h"
#include "pwsc/tensor.h"
#include "pwsc/weight_file.h"

namespace pwsc {

// Small fixed-weight CNN: each stage is a 3x3 stride-2 convolution (zero pad
// 1) plus bias and ReLU, so stage l has spatial size ceil(H / 2^l). Inputs in
// [0, 1] are mapped to [-1, 1] first. Weights are stored as "feat.<l>.weight"
// and "feat.<l>.bias", optionally with "feat.alpha" (one weight per stage).
class FeatureExtractor {
 public:
  static constexpr uint64_t kDefaultSeed = 0x5EEDF00Dull;

  // He-normal weights from `seed`, zero biases, uniform alphas.
  static FeatureExtractor Random(const std::vector<int>& channels, uint64_t seed);
  // Stages of 16, 32, 64 and 128 channels drawn from kDefaultSeed.
  static FeatureExtractor Default();
  static FeatureExtractor FromWeights(const std::vector<NamedTensor>& weights);
  // Missing or unreadable files raise kDataError.
  static FeatureExtractor Load(const std::string& path);

  std::vector<NamedTensor> ToWeights() const;
  void Save(const std::string& path) const;

  int stages() const { return static_cast<int>(weights_.size()); }
  const std::vector<int>& channels() const { return channels_; }
  const std::vector<double>& alphas() const { return alphas_; }
  // Requires one non-negative weight per stage summing to 1 (1e-9).
  void set_alphas(std::vector<double> alphas);

  // Feature maps of every stage for an N x 3 x H x W image.
  std::vector<Tensor> Extract(const Tensor& image) const;
  // Same, recorded on `tape` (weights are constants).
  std::vector<Var> Extract(Tape& tape, const Var& image) const;

 private:
  std::vector<int> channels_;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
  std::vector<double> alphas_;
};

// Euclidean distance between the globally average-pooled final-stage features.
double FeatureL2(const Tensor& a, const Tensor& b, const FeatureExtractor& extractor);
Var FeatureL2(Tape& tape, const Var& a, const Var& b,
              const FeatureExtractor& extractor);

}  // namespace pwsc

#endif  // PWSC_FEATURE_EXTRACTOR_H_
