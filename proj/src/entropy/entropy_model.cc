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

#include "pwsc/entropy_model.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pwsc/error.h"

namespace pwsc {
namespace {

// sigma'(z) = sigma(z) * sigma(-z)
double LogisticDensity(double z) { return Logistic(z) * Logistic(-z); }

struct BinTerms {
  double mass;
  double a;  // upper edge, standardized
  double b;  // lower edge, standardized
};

BinTerms Bin(double center, double loc, double scale) {
  BinTerms t;
  t.a = (center + 0.5 - loc) / scale;
  t.b = (center - 0.5 - loc) / scale;
  // Evaluate on whichever side keeps both logistic values small.
  t.mass = (center > loc) ? Logistic(-t.b) - Logistic(-t.a)
                          : Logistic(t.a) - Logistic(t.b);
  return t;
}

void CheckLatentAgainstPrior(const Tensor& y, size_t channels) {
  PWSC_CHECK_ARG(y.rank() == 4, "rate_bits: latent must be N x C x H x W, got " +
                                    ShapeString(y.shape()));
  PWSC_CHECK_ARG(static_cast<size_t>(y.dim(1)) == channels,
                 "rate_bits: latent has " + std::to_string(y.dim(1)) +
                     " channels, prior has " + std::to_string(channels));
}

}  // namespace

FactorizedPrior FactorizedPrior::Standard(int channels) {
  FactorizedPrior p;
  p.loc.assign(static_cast<size_t>(channels), 0.0f);
  p.log_scale.assign(static_cast<size_t>(channels), 0.0f);
  return p;
}

double Logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double BinMass(double center, double loc, double scale) {
  return Bin(center, loc, scale).mass;
}

std::vector<double> ChannelPmf(const FactorizedPrior& prior, int channel,
                               int q_min, int q_max) {
  PWSC_CHECK_ARG(channel >= 0 && channel < prior.channels(),
                 "pmf: channel " + std::to_string(channel) + " out of range");
  PWSC_CHECK_ARG(q_min <= q_max, "pmf: empty symbol range");
  const double loc = prior.loc[static_cast<size_t>(channel)];
  const double scale = std::exp(static_cast<double>(prior.log_scale[static_cast<size_t>(channel)]));
  std::vector<double> pmf(static_cast<size_t>(q_max - q_min + 1));
  for (int q = q_min; q <= q_max; ++q) {
    pmf[static_cast<size_t>(q - q_min)] = std::max(BinMass(q, loc, scale), kProbFloor);
  }
  const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  for (double& p : pmf) p /= total;
  return pmf;
}

double Pmf(const FactorizedPrior& prior, int channel, int q, int q_min,
           int q_max) {
  PWSC_CHECK_ARG(q >= q_min && q <= q_max, "pmf: symbol outside range");
  return ChannelPmf(prior, channel, q_min, q_max)[static_cast<size_t>(q - q_min)];
}

Var RateBits(const Var& latent, const Var& loc, const Var& log_scale) {
  const Tensor& y = latent.value();
  const size_t channels = loc.value().size();
  PWSC_CHECK_ARG(log_scale.value().size() == channels,
                 "rate_bits: loc/log_scale length mismatch");
  CheckLatentAgainstPrior(y, channels);
  const int n = y.dim(0), c = y.dim(1);
  const size_t plane = static_cast<size_t>(y.dim(2)) * y.dim(3);

  double bits = 0.0;
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const double mu = loc.value()[ch];
      const double scale = std::exp(static_cast<double>(log_scale.value()[ch]));
      const float* row = y.ptr() + (static_cast<size_t>(b) * c + ch) * plane;
      for (size_t i = 0; i < plane; ++i) {
        bits -= std::log2(std::max(BinMass(row[i], mu, scale), kProbFloor));
      }
    }
  }
  Tensor out({1}, std::vector<float>{static_cast<float>(bits)});
  CheckFinite(out, "rate_bits");

  return latent.tape()->Record(
      std::move(out), {latent, loc, log_scale},
      [=](Tape& t, int self) {
        const double g = t.Grad(self)[0];
        const Tensor& yv = t.Value(latent.id());
        const bool need_y = t.RequiresGrad(latent.id());
        const bool need_loc = t.RequiresGrad(loc.id());
        const bool need_scale = t.RequiresGrad(log_scale.id());
        const double inv_ln2 = 1.0 / std::log(2.0);
        for (int ch = 0; ch < c; ++ch) {
          const double mu = t.Value(loc.id())[ch];
          const double scale = std::exp(static_cast<double>(t.Value(log_scale.id())[ch]));
          double d_loc = 0.0, d_scale = 0.0;
          for (int b = 0; b < n; ++b) {
            const size_t off = (static_cast<size_t>(b) * c + ch) * plane;
            for (size_t i = 0; i < plane; ++i) {
              const BinTerms bt = Bin(yv[off + i], mu, scale);
              if (bt.mass <= kProbFloor) continue;
              const double da = LogisticDensity(bt.a);
              const double db = LogisticDensity(bt.b);
              // d(bits)/d(mass) = -1 / (mass ln 2)
              const double dbits = -g * inv_ln2 / bt.mass;
              const double dmass_dy = (da - db) / scale;
              if (need_y) {
                t.GradBuffer(latent.id())[off + i] += static_cast<float>(dbits * dmass_dy);
              }
              d_loc -= dbits * dmass_dy;
              d_scale -= dbits * (bt.a * da - bt.b * db);
            }
          }
          if (need_loc) t.GradBuffer(loc.id())[ch] += static_cast<float>(d_loc);
          if (need_scale) t.GradBuffer(log_scale.id())[ch] += static_cast<float>(d_scale);
        }
      });
}

double RateBits(const Tensor& latent, const FactorizedPrior& prior) {
  CheckLatentAgainstPrior(latent, prior.loc.size());
  const int n = latent.dim(0), c = latent.dim(1);
  const size_t plane = static_cast<size_t>(latent.dim(2)) * latent.dim(3);
  double bits = 0.0;
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const double mu = prior.loc[static_cast<size_t>(ch)];
      const double scale = std::exp(static_cast<double>(prior.log_scale[static_cast<size_t>(ch)]));
      const float* row = latent.ptr() + (static_cast<size_t>(b) * c + ch) * plane;
      for (size_t i = 0; i < plane; ++i) {
        bits -= std::log2(std::max(BinMass(row[i], mu, scale), kProbFloor));
      }
    }
  }
  return bits;
}

CdfTable QuantizePmf(std::span<const double> pmf, int channel, int32_t q_min,
                     int32_t q_max) {
  PWSC_CHECK_ARG(q_min <= q_max, "cdf table: q_min > q_max");
  const int64_t n = static_cast<int64_t>(q_max) - q_min + 1;
  if (n > static_cast<int64_t>(kCdfTotal)) {
    Fail(ErrorCode::kInvalidArgument,
         "cdf table: channel " + std::to_string(channel) + " spans " +
             std::to_string(n) + " symbols, more than 2^16");
  }
  PWSC_CHECK_ARG(static_cast<int64_t>(pmf.size()) == n,
                 "cdf table: pmf length does not match the symbol range");
  const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  PWSC_CHECK_ARG(total > 0.0 && std::isfinite(total), "cdf table: pmf has no mass");

  std::vector<uint32_t> counts(static_cast<size_t>(n));
  std::vector<double> frac(static_cast<size_t>(n));
  int64_t assigned = 0;
  for (size_t i = 0; i < counts.size(); ++i) {
    const double raw = pmf[i] / total * kCdfTotal;
    const double fl = std::floor(raw);
    counts[i] = std::max<uint32_t>(1, static_cast<uint32_t>(fl));
    frac[i] = raw - fl;
    assigned += counts[i];
  }
  std::vector<size_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  int64_t left = static_cast<int64_t>(kCdfTotal) - assigned;
  if (left > 0) {
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (frac[a] != frac[b]) return frac[a] > frac[b];
      return pmf[a] > pmf[b];
    });
    for (size_t k = 0; left > 0; k = (k + 1) % order.size(), --left) {
      ++counts[order[k]];
    }
  }
  while (left < 0) {
    const auto it = std::max_element(counts.begin(), counts.end());
    const int64_t take = std::min<int64_t>(-left, static_cast<int64_t>(*it) - 1);
    PWSC_CHECK_ARG(take > 0, "cdf table: cannot give every symbol a count");
    *it -= static_cast<uint32_t>(take);
    left += take;
  }

  CdfTable table;
  table.channel = channel;
  table.q_min = q_min;
  table.q_max = q_max;
  table.cdf.resize(counts.size() + 1);
  table.cdf[0] = 0;
  for (size_t i = 0; i < counts.size(); ++i) table.cdf[i + 1] = table.cdf[i] + counts[i];
  return table;
}

std::vector<CdfTable> BuildCdfTables(const FactorizedPrior& prior,
                                     std::span<const int32_t> q_min,
                                     std::span<const int32_t> q_max) {
  const size_t c = static_cast<size_t>(prior.channels());
  PWSC_CHECK_ARG(q_min.size() == c && q_max.size() == c,
                 "cdf tables: need one symbol range per channel");
  std::vector<CdfTable> tables;
  tables.reserve(c);
  for (size_t ch = 0; ch < c; ++ch) {
    PWSC_CHECK_ARG(q_min[ch] <= q_max[ch], "cdf tables: q_min > q_max on channel " +
                                               std::to_string(ch));
    if (static_cast<int64_t>(q_max[ch]) - q_min[ch] + 1 > static_cast<int64_t>(kCdfTotal)) {
      Fail(ErrorCode::kInvalidArgument,
           "cdf tables: channel " + std::to_string(ch) + " range exceeds 2^16 symbols");
    }
    const auto pmf = ChannelPmf(prior, static_cast<int>(ch), q_min[ch], q_max[ch]);
    tables.push_back(QuantizePmf(pmf, static_cast<int>(ch), q_min[ch], q_max[ch]));
  }
  return tables;
}

double TableBits(const CdfTable& table, std::span<const int32_t> symbols) {
  double bits = 0.0;
  for (int32_t s : symbols) {
    PWSC_CHECK_ARG(s >= table.q_min && s <= table.q_max,
                   "table bits: symbol " + std::to_string(s) + " outside channel " +
                       std::to_string(table.channel) + " range");
    bits -= std::log2(static_cast<double>(table.count(s)) / kCdfTotal);
  }
  return bits;
}

}  // namespace pwsc
