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
#include <string>
#include <vector>

#include "pwsc/error.h"
#include "pwsc/ops.h"
#include "pwsc/simd.h"

namespace pwsc {
namespace {

Tensor ScalarTensor(double v) { return Tensor({1}, std::vector<float>{static_cast<float>(v)}); }

void CheckSame(const Var& a, const Var& b, const char* op) {
  CheckSameShape(a.value(), b.value(), op);
}

// Mirror index without edge repetition; folds repeatedly when the pad
// exceeds the extent.
inline int Reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

Var NonnegativeReparam(const Var& v, float floor) {
  const Tensor& x = v.value();
  Tensor out(x.shape());
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] * x[i] + floor;
  CheckFinite(out, "nonnegative_reparam");
  return v.tape()->Record(std::move(out), {v}, [v](Tape& t, int self) {
    const Tensor& g = t.Grad(self);
    const Tensor& x = t.Value(v.id());
    Tensor& dx = t.GradBuffer(v.id());
    for (size_t i = 0; i < x.size(); ++i) dx[i] += 2.0f * x[i] * g[i];
  });
}

Var ReflectPad(const Var& input, int pad) {
  const Tensor& x = input.value();
  PWSC_CHECK_ARG(x.rank() == 4, "reflect_pad: expected N x C x H x W");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  PWSC_CHECK_ARG(pad >= 0, "reflect_pad: pad must be >= 0");
  const int oh = h + 2 * pad, ow = w + 2 * pad;
  Tensor out({n, c, oh, ow});
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      for (int y = 0; y < oh; ++y) {
        const int sy = Reflect(y - pad, h);
        for (int xo = 0; xo < ow; ++xo) {
          out.at(b, ch, y, xo) = x.at(b, ch, sy, Reflect(xo - pad, w));
        }
      }
    }
  }
  return input.tape()->Record(
      std::move(out), {input}, [=](Tape& t, int self) {
        const Tensor& g = t.Grad(self);
        Tensor& dx = t.GradBuffer(input.id());
        for (int b = 0; b < n; ++b) {
          for (int ch = 0; ch < c; ++ch) {
            for (int y = 0; y < oh; ++y) {
              const int sy = Reflect(y - pad, h);
              for (int xo = 0; xo < ow; ++xo) {
                dx.at(b, ch, sy, Reflect(xo - pad, w)) += g.at(b, ch, y, xo);
              }
            }
          }
        }
      });
}

Var AddChannelBias(const Var& input, const Var& bias) {
  const Tensor& x = input.value();
  PWSC_CHECK_ARG(x.rank() == 4, "add_channel_bias: expected N x C x H x W");
  const int n = x.dim(0), c = x.dim(1);
  const size_t plane = static_cast<size_t>(x.dim(2)) * x.dim(3);
  PWSC_CHECK_ARG(bias.value().size() == static_cast<size_t>(c),
                 "add_channel_bias: bias needs one entry per channel");
  Tensor out = x;
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      float* p = out.ptr() + (static_cast<size_t>(b) * c + ch) * plane;
      const float bv = bias.value()[ch];
      for (size_t i = 0; i < plane; ++i) p[i] += bv;
    }
  }
  CheckFinite(out, "add_channel_bias");
  return input.tape()->Record(
      std::move(out), {input, bias}, [=](Tape& t, int self) {
        const Tensor& g = t.Grad(self);
        if (t.RequiresGrad(input.id())) {
          Tensor& dx = t.GradBuffer(input.id());
          for (size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
        }
        if (t.RequiresGrad(bias.id())) {
          Tensor& db = t.GradBuffer(bias.id());
          for (int b = 0; b < n; ++b) {
            for (int ch = 0; ch < c; ++ch) {
              const float* p = g.ptr() + (static_cast<size_t>(b) * c + ch) * plane;
              double s = 0.0;
              for (size_t i = 0; i < plane; ++i) s += p[i];
              db[ch] += static_cast<float>(s);
            }
          }
        }
      });
}

Var Relu(const Var& x) {
  const Tensor& v = x.value();
  Tensor out(v.shape());
  for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0f ? v[i] : 0.0f;
  CheckFinite(out, "relu");
  return x.tape()->Record(std::move(out), {x}, [x](Tape& t, int self) {
    const Tensor& g = t.Grad(self);
    const Tensor& v = t.Value(x.id());
    Tensor& dx = t.GradBuffer(x.id());
    for (size_t i = 0; i < v.size(); ++i) {
      if (v[i] > 0.0f) dx[i] += g[i];
    }
  });
}

Var Add(const Var& a, const Var& b) {
  CheckSame(a, b, "add");
  Tensor out = a.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  CheckFinite(out, "add");
  return a.tape()->Record(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Tensor& g = t.Grad(self);
    for (const Var& v : {a, b}) {
      if (!t.RequiresGrad(v.id())) continue;
      Tensor& d = t.GradBuffer(v.id());
      for (size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
  });
}

Var Sub(const Var& a, const Var& b) {
  CheckSame(a, b, "sub");
  Tensor out = a.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  CheckFinite(out, "sub");
  return a.tape()->Record(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Tensor& g = t.Grad(self);
    if (t.RequiresGrad(a.id())) {
      Tensor& d = t.GradBuffer(a.id());
      for (size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (t.RequiresGrad(b.id())) {
      Tensor& d = t.GradBuffer(b.id());
      for (size_t i = 0; i < g.size(); ++i) d[i] -= g[i];
    }
  });
}

Var Mul(const Var& a, const Var& b) {
  CheckSame(a, b, "mul");
  Tensor out = a.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  CheckFinite(out, "mul");
  return a.tape()->Record(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Tensor& g = t.Grad(self);
    const Tensor& av = t.Value(a.id());
    const Tensor& bv = t.Value(b.id());
    if (t.RequiresGrad(a.id())) {
      Tensor& d = t.GradBuffer(a.id());
      for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] * bv[i];
    }
    if (t.RequiresGrad(b.id())) {
      Tensor& d = t.GradBuffer(b.id());
      for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] * av[i];
    }
  });
}

Var Scale(const Var& x, float c) {
  Tensor out = x.value();
  for (float& v : out.data()) v *= c;
  CheckFinite(out, "scale");
  return x.tape()->Record(std::move(out), {x}, [x, c](Tape& t, int self) {
    const Tensor& g = t.Grad(self);
    Tensor& d = t.GradBuffer(x.id());
    for (size_t i = 0; i < g.size(); ++i) d[i] += c * g[i];
  });
}

Var Square(const Var& x) { return Mul(x, x); }

Var Sum(const Var& x) {
  const Tensor& v = x.value();
  double s = 0.0;
  for (float f : v.data()) s += f;
  Tensor out = ScalarTensor(s);
  CheckFinite(out, "sum");
  return x.tape()->Record(std::move(out), {x}, [x](Tape& t, int self) {
    const float g = t.Grad(self)[0];
    Tensor& d = t.GradBuffer(x.id());
    for (float& f : d.data()) f += g;
  });
}

Var Mean(const Var& x) {
  const size_t n = x.value().size();
  PWSC_CHECK_ARG(n > 0, "mean of an empty tensor");
  return Scale(Sum(x), static_cast<float>(1.0 / static_cast<double>(n)));
}

Var MseLoss(const Var& a, const Var& b) {
  CheckSame(a, b, "mse");
  const size_t n = a.value().size();
  PWSC_CHECK_ARG(n > 0, "mse of empty tensors");
  const double ssd = simd::Active().sum_sq_diff(n, a.value().ptr(), b.value().ptr());
  Tensor out = ScalarTensor(ssd / static_cast<double>(n));
  CheckFinite(out, "mse");
  return a.tape()->Record(std::move(out), {a, b}, [a, b, n](Tape& t, int self) {
    const double g = t.Grad(self)[0];
    const Tensor& av = t.Value(a.id());
    const Tensor& bv = t.Value(b.id());
    const double k = 2.0 * g / static_cast<double>(n);
    if (t.RequiresGrad(a.id())) {
      Tensor& d = t.GradBuffer(a.id());
      for (size_t i = 0; i < n; ++i) {
        d[i] += static_cast<float>(k * (static_cast<double>(av[i]) - bv[i]));
      }
    }
    if (t.RequiresGrad(b.id())) {
      Tensor& d = t.GradBuffer(b.id());
      for (size_t i = 0; i < n; ++i) {
        d[i] -= static_cast<float>(k * (static_cast<double>(av[i]) - bv[i]));
      }
    }
  });
}

Var GlobalAvgPool(const Var& x) {
  const Tensor& v = x.value();
  PWSC_CHECK_ARG(v.rank() == 4, "global_avg_pool: expected N x C x H x W");
  const int n = v.dim(0), c = v.dim(1);
  const size_t plane = static_cast<size_t>(v.dim(2)) * v.dim(3);
  PWSC_CHECK_ARG(plane > 0, "global_avg_pool: empty spatial extent");
  Tensor out({n, c, 1, 1});
  for (int i = 0; i < n * c; ++i) {
    double s = 0.0;
    const float* p = v.ptr() + static_cast<size_t>(i) * plane;
    for (size_t j = 0; j < plane; ++j) s += p[j];
    out[static_cast<size_t>(i)] = static_cast<float>(s / static_cast<double>(plane));
  }
  CheckFinite(out, "global_avg_pool");
  return x.tape()->Record(std::move(out), {x}, [x, n, c, plane](Tape& t, int self) {
    const Tensor& g = t.Grad(self);
    Tensor& d = t.GradBuffer(x.id());
    const float inv = static_cast<float>(1.0 / static_cast<double>(plane));
    for (int i = 0; i < n * c; ++i) {
      const float gi = g[static_cast<size_t>(i)] * inv;
      float* p = d.ptr() + static_cast<size_t>(i) * plane;
      for (size_t j = 0; j < plane; ++j) p[j] += gi;
    }
  });
}

Var L2Distance(const Var& a, const Var& b) {
  CheckSame(a, b, "l2_distance");
  const size_t n = a.value().size();
  const double dist =
      std::sqrt(simd::Active().sum_sq_diff(n, a.value().ptr(), b.value().ptr()));
  Tensor out = ScalarTensor(dist);
  CheckFinite(out, "l2_distance");
  return a.tape()->Record(std::move(out), {a, b}, [a, b, n, dist](Tape& t, int self) {
    if (dist == 0.0) return;
    const double g = t.Grad(self)[0] / dist;
    const Tensor& av = t.Value(a.id());
    const Tensor& bv = t.Value(b.id());
    if (t.RequiresGrad(a.id())) {
      Tensor& d = t.GradBuffer(a.id());
      for (size_t i = 0; i < n; ++i) {
        d[i] += static_cast<float>(g * (static_cast<double>(av[i]) - bv[i]));
      }
    }
    if (t.RequiresGrad(b.id())) {
      Tensor& d = t.GradBuffer(b.id());
      for (size_t i = 0; i < n; ++i) {
        d[i] -= static_cast<float>(g * (static_cast<double>(av[i]) - bv[i]));
      }
    }
  });
}

Var WeightedSum(const std::vector<Var>& terms, const std::vector<float>& w) {
  PWSC_CHECK_ARG(!terms.empty() && terms.size() == w.size(),
                 "weighted_sum: need one weight per term");
  double s = 0.0;
  for (size_t i = 0; i < terms.size(); ++i) {
    PWSC_CHECK_ARG(terms[i].value().size() == 1, "weighted_sum: terms must be scalars");
    s += static_cast<double>(w[i]) * terms[i].value()[0];
  }
  Tensor out = ScalarTensor(s);
  CheckFinite(out, "weighted_sum");
  return terms[0].tape()->Record(std::move(out), terms, [terms, w](Tape& t, int self) {
    const float g = t.Grad(self)[0];
    for (size_t i = 0; i < terms.size(); ++i) {
      if (t.RequiresGrad(terms[i].id())) t.GradBuffer(terms[i].id())[0] += w[i] * g;
    }
  });
}

}  // namespace pwsc
