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

#ifndef PWSC_ENTROPY_MODEL_H_
#define PWSC_ENTROPY_MODEL_H_

#include <cstdint>
#include <span>
#include <vector>

#include "pwsc/autograd.h"
#include "pwsc/tensor.h"

namespace pwsc {

// Smallest probability any coded symbol may receive (2^-15).
inline constexpr double kProbFloor = 1.0 / 32768.0;
inline constexpr int kCdfPrecisionBits = 16;
inline constexpr uint32_t kCdfTotal = 1u << kCdfPrecisionBits;

// Fully factorized prior: each latent channel c is a discretized logistic
// with location loc[c] and scale exp(log_scale[c]).
struct FactorizedPrior {
  std::vector<float> loc;
  std::vector<float> log_scale;

  int channels() const { return static_cast<int>(loc.size()); }
  static FactorizedPrior Standard(int channels);
};

double Logistic(double z);

// Probability mass of the unit bin [q - 0.5, q + 0.5) before flooring,
// evaluated without cancellation in either tail.
double BinMass(double center, double loc, double scale);

// Floored at kProbFloor and renormalized over [q_min, q_max].
std::vector<double> ChannelPmf(const FactorizedPrior& prior, int channel,
                               int q_min, int q_max);
double Pmf(const FactorizedPrior& prior, int channel, int q, int q_min,
           int q_max);

// Total bits -sum log2 P(bin containing y) for an N x C x H x W latent. Bins
// are unit-width around each value, so noisy (training) and rounded (coding)
// latents share one definition. Probabilities are floored at kProbFloor;
// the gradient is zero where the floor is active.
Var RateBits(const Var& latent, const Var& loc, const Var& log_scale);
double RateBits(const Tensor& latent, const FactorizedPrior& prior);

// Coder-facing quantized CDF of one channel over [q_min, q_max]:
// cdf[0] = 0, cdf[n] = 2^16, every symbol count >= 1.
struct CdfTable {
  int channel = 0;
  int32_t q_min = 0;
  int32_t q_max = 0;
  std::vector<uint32_t> cdf;

  int num_symbols() const { return q_max - q_min + 1; }
  uint32_t count(int q) const {
    const size_t i = static_cast<size_t>(q - q_min);
    return cdf[i + 1] - cdf[i];
  }
};

// Quantizes a PMF to counts summing to 2^16. Each symbol gets
// max(1, floor(p * 2^16)); leftover counts go to the largest fractional
// remainders (ties to the more probable symbol) and any excess from the
// minimum-count bumps is taken back from the most probable symbols.
CdfTable QuantizePmf(std::span<const double> pmf, int channel, int32_t q_min,
                     int32_t q_max);

std::vector<CdfTable> BuildCdfTables(const FactorizedPrior& prior,
                                     std::span<const int32_t> q_min,
                                     std::span<const int32_t> q_max);

// Ideal code length of integer symbols of `channel` under `table`.
double TableBits(const CdfTable& table, std::span<const int32_t> symbols);

}  // namespace pwsc

#endif  // PWSC_ENTROPY_MODEL_H_
