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
#include <numeric>
#include <vector>

#include "doctest.h"
#include "pwsc/autograd.h"
#include "pwsc/entropy_model.h"
#include "pwsc/error.h"
#include "pwsc/rng.h"

namespace pwsc {
namespace {

// Closed-form logistic evaluated directly, independent of the library.
double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double RefMass(double q, double mu, double scale) {
  return Sigmoid((q + 0.5 - mu) / scale) - Sigmoid((q - 0.5 - mu) / scale);
}

// Inverse-CDF sample of a logistic.
double SampleLogistic(Rng& rng, double mu, double scale) {
  double u = rng.Uniform();
  u = std::clamp(u, 1e-12, 1.0 - 1e-12);
  return mu + scale * std::log(u / (1.0 - u));
}

TEST_CASE("pmf examples") {
  const FactorizedPrior prior = FactorizedPrior::Standard(1);
  SUBCASE("unit scale at zero") {
    const double expected = Sigmoid(0.5) - Sigmoid(-0.5);
    CHECK(expected == doctest::Approx(0.2450).epsilon(1e-3));
    CHECK(BinMass(0.0, 0.0, 1.0) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("symmetric about a zero location") {
    for (int q = 0; q <= 40; ++q) CHECK(BinMass(q, 0.0, 1.0) == BinMass(-q, 0.0, 1.0));
    const auto pmf = ChannelPmf(prior, 0, -20, 20);
    for (int q = 0; q <= 20; ++q) CHECK(pmf[20 + q] == pmf[20 - q]);
  }
  SUBCASE("sums to one over [-30, 30] before flooring") {
    double s = 0.0;
    for (int q = -30; q <= 30; ++q) s += BinMass(q, 0.0, 1.0);
    CHECK(std::abs(s - 1.0) < 1e-9);
  }
  SUBCASE("floored and renormalized") {
    const auto pmf = ChannelPmf(prior, 0, -40, 40);
    double s = 0.0;
    for (double p : pmf) {
      CHECK(p >= kProbFloor / (1.0 + pmf.size() * kProbFloor));
      s += p;
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
    CHECK(Pmf(prior, 0, 0, -40, 40) == doctest::Approx(pmf[40]));
  }
  SUBCASE("far tails stay accurate") {
    // Cancellation-free evaluation in the upper tail.
    const double ref = std::exp(-29.5) - std::exp(-30.5);
    CHECK(BinMass(30.0, 0.0, 1.0) == doctest::Approx(ref).epsilon(1e-6));
    CHECK(BinMass(-30.0, 0.0, 1.0) == doctest::Approx(ref).epsilon(1e-6));
  }
}

TEST_CASE("mass over a coder range plus tails is one") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const double mu = rng.Uniform(-3, 3);
    const double scale = std::exp(rng.Uniform(-2, 2));
    const int lo = -static_cast<int>(rng.Below(20)), hi = static_cast<int>(rng.Below(20));
    double s = Sigmoid((lo - 0.5 - mu) / scale) + (1.0 - Sigmoid((hi + 0.5 - mu) / scale));
    for (int q = lo; q <= hi; ++q) s += BinMass(q, mu, scale);
    CHECK(std::abs(s - 1.0) < 1e-6);
  }
}

TEST_CASE("rate_bits examples") {
  SUBCASE("uniform four-symbol table, 100 symbols") {
    const std::vector<double> pmf(4, 0.25);
    const CdfTable t = QuantizePmf(pmf, 0, 0, 3);
    std::vector<int32_t> syms(100);
    for (int i = 0; i < 100; ++i) syms[static_cast<size_t>(i)] = i % 4;
    CHECK(TableBits(t, syms) == doctest::Approx(200.0).epsilon(1e-12));
  }
  SUBCASE("all-zero latent under the standard prior") {
    const int n = 2 * 3 * 4 * 5;
    Tensor y({2, 3, 4, 5}, 0.0f);
    const double per = -std::log2(RefMass(0, 0, 1));
    CHECK(per == doctest::Approx(2.029).epsilon(1e-3));
    CHECK(RateBits(y, FactorizedPrior::Standard(3)) == doctest::Approx(n * per).epsilon(1e-9));
    Tape tape;
    Var r = RateBits(tape.Constant(y), tape.Constant(Tensor({3}, 0.0f)),
                     tape.Constant(Tensor({3}, 0.0f)));
    CHECK(r.value()[0] == doctest::Approx(n * per).epsilon(1e-6));
  }
  SUBCASE("channel count mismatch") {
    CHECK_THROWS_AS(RateBits(Tensor({1, 2, 2, 2}), FactorizedPrior::Standard(3)), Error);
  }
}

// Finite differences of the binary64 rate of a small latent.
TEST_CASE("rate_bits gradients match finite differences") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int c = 3;
    Tensor y({1, c, 2, 3});
    for (float& v : y.data()) v = static_cast<float>(rng.Uniform(-4, 4));
    FactorizedPrior prior;
    for (int i = 0; i < c; ++i) {
      prior.loc.push_back(static_cast<float>(rng.Uniform(-1, 1)));
      prior.log_scale.push_back(static_cast<float>(rng.Uniform(-0.5, 1.0)));
    }
    Tape tape;
    Var yv = tape.Leaf(y, true);
    Var lv = tape.Leaf(Tensor({c}, prior.loc), true);
    Var sv = tape.Leaf(Tensor({c}, prior.log_scale), true);
    tape.Backward(RateBits(yv, lv, sv));

    auto rate = [&](const Tensor& yy, const FactorizedPrior& p) { return RateBits(yy, p); };
    const double h = 1e-3;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1e-2, std::abs(b)); };
    for (int ch = 0; ch < c; ++ch) {
      FactorizedPrior up = prior, dn = prior;
      // Perturb in double through the float parameter only approximately;
      // use a wide step so float rounding stays negligible.
      up.loc[ch] += static_cast<float>(h);
      dn.loc[ch] -= static_cast<float>(h);
      const double fd_mu = (rate(y, up) - rate(y, dn)) / (up.loc[ch] - dn.loc[ch]);
      CHECK(rel(lv.grad()[ch], fd_mu) < 1e-3);
      up = prior;
      dn = prior;
      up.log_scale[ch] += static_cast<float>(h);
      dn.log_scale[ch] -= static_cast<float>(h);
      const double fd_s = (rate(y, up) - rate(y, dn)) / (up.log_scale[ch] - dn.log_scale[ch]);
      CHECK(rel(sv.grad()[ch], fd_s) < 1e-3);
    }
    for (size_t i = 0; i < y.size(); ++i) {
      Tensor up = y, dn = y;
      up[i] += static_cast<float>(h);
      dn[i] -= static_cast<float>(h);
      const double fd = (rate(up, prior) - rate(dn, prior)) / (up[i] - dn[i]);
      CHECK(rel(yv.grad()[i], fd) < 1e-3);
    }
  }
}

TEST_CASE("rate is finite with finite gradients for large latents") {
  Tape tape;
  Tensor y({1, 2, 1, 6}, std::vector<float>{-1e4f, -500, -0.3f, 0, 77, 1e4f,
                                            1e4f, 3, -2, 0.5f, -1e4f, 9999});
  Var yv = tape.Leaf(y, true);
  Var lv = tape.Leaf(Tensor({2}, std::vector<float>{0.2f, -1}), true);
  Var sv = tape.Leaf(Tensor({2}, std::vector<float>{0.0f, 2.0f}), true);
  Var r = RateBits(yv, lv, sv);
  tape.Backward(r);
  CHECK(std::isfinite(r.value()[0]));
  CHECK(yv.grad().AllFinite());
  CHECK(lv.grad().AllFinite());
  CHECK(sv.grad().AllFinite());
  // The floor caps the cost of any symbol at 15 bits.
  CHECK(r.value()[0] <= 12 * 15.0f + 1e-3f);
}

TEST_CASE("cdf table examples") {
  SUBCASE("equal pmf") {
    const std::vector<double> pmf(4, 0.25);
    const CdfTable t = QuantizePmf(pmf, 0, -2, 1);
    CHECK(t.cdf == std::vector<uint32_t>{0, 16384, 32768, 49152, 65536});
  }
  SUBCASE("near-zero symbol keeps one count") {
    const double eps = 1e-9;
    const std::vector<double> pmf{0.5, 0.5 - eps, eps};
    const CdfTable t = QuantizePmf(pmf, 0, 0, 2);
    CHECK(t.count(0) >= 32767);
    CHECK(t.count(1) == 32767);
    CHECK(t.count(2) >= 1);
    CHECK(t.cdf.back() == 65536u);
  }
  SUBCASE("too many symbols") {
    FactorizedPrior p = FactorizedPrior::Standard(1);
    const std::vector<int32_t> lo{-40000}, hi{40000};
    CHECK_THROWS_AS(BuildCdfTables(p, lo, hi), Error);
  }
  SUBCASE("inverted range") {
    const std::vector<double> pmf{1.0};
    CHECK_THROWS_AS(QuantizePmf(pmf, 0, 3, 2), Error);
  }
}

TEST_CASE("random priors: tables are monotone and faithful") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    FactorizedPrior prior;
    prior.loc.push_back(static_cast<float>(rng.Uniform(-5, 5)));
    prior.log_scale.push_back(static_cast<float>(rng.Uniform(-3, 3)));
    const int32_t lo = -static_cast<int32_t>(rng.Below(60));
    const int32_t hi = static_cast<int32_t>(rng.Below(60));
    const std::vector<int32_t> los{lo}, his{hi};
    const CdfTable t = BuildCdfTables(prior, los, his)[0];
    REQUIRE(t.cdf.size() == static_cast<size_t>(hi - lo + 2));
    CHECK(t.cdf.front() == 0u);
    CHECK(t.cdf.back() == kCdfTotal);
    const auto pmf = ChannelPmf(prior, 0, lo, hi);
    for (int q = lo; q <= hi; ++q) {
      CHECK(t.cdf[q - lo + 1] > t.cdf[q - lo]);
      // The floor already guarantees two counts per symbol, so rounding
      // moves each probability by less than one count.
      const double p_table = t.count(q) / 65536.0;
      CHECK(std::abs(p_table - pmf[q - lo]) <= 1.0 / 65536.0);
    }
  }
}

TEST_CASE("table rate is within 0.01 bits/symbol of the continuous rate") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const int c = 4, n = 2000;
    FactorizedPrior prior;
    for (int i = 0; i < c; ++i) {
      prior.loc.push_back(static_cast<float>(rng.Uniform(-1, 1)));
      prior.log_scale.push_back(static_cast<float>(rng.Uniform(-1.0, 2.0)));
    }
    Tensor y({1, c, 1, n});
    std::vector<int32_t> lo(c, 0), hi(c, 0);
    std::vector<std::vector<int32_t>> syms(c);
    for (int ch = 0; ch < c; ++ch) {
      for (int i = 0; i < n; ++i) {
        const double v = std::round(SampleLogistic(rng, prior.loc[ch], std::exp(prior.log_scale[ch])));
        y[static_cast<size_t>(ch) * n + i] = static_cast<float>(v);
        syms[ch].push_back(static_cast<int32_t>(v));
      }
      lo[ch] = *std::min_element(syms[ch].begin(), syms[ch].end());
      hi[ch] = *std::max_element(syms[ch].begin(), syms[ch].end());
    }
    const auto tables = BuildCdfTables(prior, lo, hi);
    double table_bits = 0.0;
    for (int ch = 0; ch < c; ++ch) table_bits += TableBits(tables[ch], syms[ch]);
    const double cont = RateBits(y, prior);
    CHECK(std::abs(table_bits - cont) / (c * n) < 0.01);
  }
}

}  // namespace
}  // namespace pwsc
