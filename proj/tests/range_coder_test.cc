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
#include <vector>

#include "doctest.h"
#include "pwsc/bitstream.h"
#include "pwsc/entropy_model.h"
#include "pwsc/error.h"
#include "pwsc/range_coder.h"
#include "pwsc/rng.h"

namespace pwsc {
namespace {

CdfTable TableFromCounts(int channel, int32_t q_min, const std::vector<uint32_t>& counts) {
  CdfTable t;
  t.channel = channel;
  t.q_min = q_min;
  t.q_max = q_min + static_cast<int32_t>(counts.size()) - 1;
  t.cdf.push_back(0);
  for (uint32_t c : counts) t.cdf.push_back(t.cdf.back() + c);
  return t;
}

std::vector<int> ChannelsOf(const std::vector<CodedSymbol>& syms) {
  std::vector<int> ch;
  for (const auto& s : syms) ch.push_back(s.channel);
  return ch;
}

double IdealBits(const std::vector<CodedSymbol>& syms, const std::vector<CdfTable>& tables) {
  double bits = 0.0;
  for (const auto& s : syms) {
    const CdfTable& t = tables[static_cast<size_t>(s.channel)];
    bits -= std::log2(t.count(s.value) / 65536.0);
  }
  return bits;
}

// Random prior tables over random ranges plus symbols drawn from them.
struct Case {
  std::vector<CdfTable> tables;
  std::vector<CodedSymbol> symbols;
};

Case RandomCase(Rng& rng, int max_len) {
  Case c;
  const int channels = 1 + static_cast<int>(rng.Below(6));
  FactorizedPrior prior;
  std::vector<int32_t> lo, hi;
  for (int ch = 0; ch < channels; ++ch) {
    prior.loc.push_back(static_cast<float>(rng.Uniform(-3, 3)));
    prior.log_scale.push_back(static_cast<float>(rng.Uniform(-3, 3)));
    lo.push_back(-static_cast<int32_t>(rng.Below(50)));
    hi.push_back(static_cast<int32_t>(rng.Below(50)));
  }
  c.tables = BuildCdfTables(prior, lo, hi);
  const int len = static_cast<int>(rng.Below(static_cast<uint64_t>(max_len) + 1));
  for (int i = 0; i < len; ++i) {
    const int ch = static_cast<int>(rng.Below(channels));
    const CdfTable& t = c.tables[ch];
    // Mix table-distributed draws with uniform ones to reach rare symbols.
    int32_t v;
    if (rng.Bernoulli(0.8)) {
      const uint32_t slot = static_cast<uint32_t>(rng.Below(65536));
      int k = 0;
      while (t.cdf[k + 1] <= slot) ++k;
      v = t.q_min + k;
    } else {
      v = t.q_min + static_cast<int32_t>(rng.Below(t.num_symbols()));
    }
    c.symbols.push_back({ch, v});
  }
  return c;
}

TEST_CASE("range coder examples") {
  SUBCASE("empty sequence is flush bytes only") {
    const std::vector<CdfTable> tables{TableFromCounts(0, 0, {16384, 16384, 16384, 16384})};
    const auto bytes = RangeEncode({}, tables);
    CHECK(bytes.size() <= 8);
    CHECK(RangeDecode(bytes, tables, {}).empty());
  }
  SUBCASE("1024 uniform four-symbol draws") {
    const std::vector<CdfTable> tables{TableFromCounts(0, 0, {16384, 16384, 16384, 16384})};
    Rng rng(1);
    std::vector<CodedSymbol> syms;
    for (int i = 0; i < 1024; ++i) syms.push_back({0, static_cast<int32_t>(rng.Below(4))});
    const auto bytes = RangeEncode(syms, tables);
    CHECK(bytes.size() >= 256);
    CHECK(bytes.size() <= 264);
    const auto back = RangeDecode(bytes, tables, ChannelsOf(syms));
    for (size_t i = 0; i < syms.size(); ++i) CHECK(back[i] == syms[i].value);
  }
  SUBCASE("skewed 0.9 / 0.1 source") {
    const std::vector<CdfTable> tables{TableFromCounts(0, 0, {58982, 6554})};
    Rng rng(2);
    std::vector<CodedSymbol> syms;
    for (int i = 0; i < 10000; ++i) syms.push_back({0, rng.Bernoulli(0.1) ? 1 : 0});
    const auto bytes = RangeEncode(syms, tables);
    const double h = -(0.9 * std::log2(0.9) + 0.1 * std::log2(0.1));
    CHECK(h == doctest::Approx(0.469).epsilon(1e-3));
    const double per = 8.0 * bytes.size() / syms.size();
    CHECK(std::abs(per - h) / h < 0.02);
  }
  SUBCASE("out-of-range symbol names channel and value") {
    const std::vector<CdfTable> tables{TableFromCounts(0, 0, {32768, 32768}),
                                       TableFromCounts(1, -1, {32768, 32768})};
    const std::vector<CodedSymbol> syms{{0, 1}, {1, 5}};
    try {
      RangeEncode(syms, tables);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInvalidArgument);
      const std::string msg = e.what();
      CHECK(msg.find("channel 1") != std::string::npos);
      CHECK(msg.find('5') != std::string::npos);
    }
  }
  SUBCASE("raw bits") {
    RangeEncoder enc;
    enc.EncodeBits(0xBEEF, 16);
    enc.EncodeBits(5, 3);
    const auto bytes = enc.Finish();
    RangeDecoder dec(bytes);
    CHECK(dec.DecodeBits(16) == 0xBEEFu);
    CHECK(dec.DecodeBits(3) == 5u);
  }
}

TEST_CASE("fuzz: round trip, rate tightness, determinism") {
  Rng rng(1234);
  for (int trial = 0; trial < 1000; ++trial) {
    const Case c = RandomCase(rng, trial < 900 ? 300 : 5000);
    const auto bytes = RangeEncode(c.symbols, c.tables);
    const auto back = RangeDecode(bytes, c.tables, ChannelsOf(c.symbols));
    REQUIRE(back.size() == c.symbols.size());
    bool same = true;
    for (size_t i = 0; i < back.size(); ++i) same = same && back[i] == c.symbols[i].value;
    CHECK(same);
    const double ideal = IdealBits(c.symbols, c.tables);
    CHECK(8.0 * bytes.size() <= ideal * 1.02 + 64.0);
    CHECK(RangeEncode(c.symbols, c.tables) == bytes);
  }
}

TEST_CASE("carry propagation through long runs of 0xFF") {
  // A near-certain symbol keeps low close to the top of the interval.
  const std::vector<CdfTable> tables{TableFromCounts(0, 0, {1, 65535})};
  for (int n : {1, 10, 100, 5000}) {
    std::vector<CodedSymbol> syms(static_cast<size_t>(n), CodedSymbol{0, 1});
    syms.push_back({0, 0});
    syms.insert(syms.end(), static_cast<size_t>(n), CodedSymbol{0, 1});
    const auto bytes = RangeEncode(syms, tables);
    const auto back = RangeDecode(bytes, tables, ChannelsOf(syms));
    for (size_t i = 0; i < syms.size(); ++i) REQUIRE(back[i] == syms[i].value);
  }
}

TEST_CASE("decode failures are never silent") {
  Rng rng(77);
  int wrong_table_failures = 0, trials = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Case c = RandomCase(rng, 400);
    if (c.symbols.size() < 20) continue;
    const auto bytes = RangeEncode(c.symbols, c.tables);
    CHECK_THROWS_AS(RangeDecode(std::span(bytes).first(bytes.size() / 2), c.tables,
                                ChannelsOf(c.symbols)),
                    Error);
    // Perturb every table by shifting its range: decoding must throw.
    std::vector<CdfTable> wrong = c.tables;
    for (auto& t : wrong) {
      FactorizedPrior p;
      p.loc.push_back(static_cast<float>(rng.Uniform(-3, 3)));
      p.log_scale.push_back(static_cast<float>(rng.Uniform(-1, 2)));
      const std::vector<int32_t> lo{t.q_min}, hi{t.q_max};
      t.cdf = BuildCdfTables(p, lo, hi)[0].cdf;
    }
    ++trials;
    try {
      const auto back = RangeDecode(bytes, wrong, ChannelsOf(c.symbols));
      bool same = true;
      for (size_t i = 0; i < back.size(); ++i) same = same && back[i] == c.symbols[i].value;
      CHECK(same);  // accepted output must at least be correct
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kCorruptStream);
      ++wrong_table_failures;
    }
  }
  CHECK(wrong_table_failures >= trials - 1);
}

LatentCode SmallCode() {
  LatentCode code;
  code.channels = 2;
  code.height = 2;
  code.width = 3;
  code.values = {0, 1, -1, 2, 0, 0, 3, 3, -2, 0, 1, 1};
  code.image_height = 15;
  code.image_width = 22;
  code.padded_height = 16;
  code.padded_width = 24;
  code.q_min = {-1, -2};
  code.q_max = {2, 3};
  return code;
}

TEST_CASE("bitstream pack / unpack") {
  const LatentCode code = SmallCode();
  const std::vector<uint8_t> payload{1, 2, 3, 250, 9};
  const auto bytes = PackBitstream(code, payload, 0x0123456789ABCDEFull);
  SUBCASE("field-by-field identity") {
    const Bitstream bs = UnpackBitstream(bytes);
    CHECK(bs.header.fingerprint == 0x0123456789ABCDEFull);
    CHECK(bs.header.image_height == 15u);
    CHECK(bs.header.image_width == 22u);
    CHECK(bs.header.padded_height == 16u);
    CHECK(bs.header.padded_width == 24u);
    CHECK(bs.header.latent_channels == 2u);
    CHECK(bs.header.latent_height == 2u);
    CHECK(bs.header.latent_width == 3u);
    CHECK(bs.header.q_min == std::vector<int32_t>{-1, -2});
    CHECK(bs.header.q_max == std::vector<int32_t>{2, 3});
    CHECK(bs.payload == payload);
    CHECK(bytes.size() == 4 + 1 + 8 + 7 * 4 + 2 * 8 + payload.size() + 4);
  }
  SUBCASE("magic and version") {
    CHECK(bytes[0] == 'P');
    CHECK(bytes[3] == 'C');
    CHECK(bytes[4] == 1);
    auto v2 = bytes;
    v2[4] = 2;
    CHECK_THROWS_AS(UnpackBitstream(v2), Error);
    auto bad = bytes;
    bad[1] = 'X';
    try {
      UnpackBitstream(bad);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDataError);
    }
  }
  SUBCASE("flipped payload byte is a CRC error") {
    for (size_t i = bytes.size() - 4 - payload.size(); i < bytes.size(); ++i) {
      auto bad = bytes;
      bad[i] ^= 0x10;
      try {
        UnpackBitstream(bad);
        FAIL("expected an error");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kCorruptStream);
      }
    }
  }
  SUBCASE("truncated header") {
    CHECK_THROWS_AS(UnpackBitstream(std::span(bytes).first(20)), Error);
  }
  SUBCASE("bits per pixel") {
    CHECK(BitsPerPixel(6272, 224, 224) == 1.0);
    CHECK(BitsPerPixel(0, 224, 224) == 0.0);
  }
  SUBCASE("channel-major symbol order") {
    const auto syms = LatentSymbols(code);
    REQUIRE(syms.size() == 12);
    CHECK(syms[5].channel == 0);
    CHECK(syms[6].channel == 1);
    CHECK(syms[6].value == 3);
  }
}

}  // namespace
}  // namespace pwsc
