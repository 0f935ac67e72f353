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

#include "pwsc/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pwsc/error.h"

namespace pwsc {

size_t NumElements(const Shape& shape) {
  size_t n = 1;
  for (int d : shape) {
    PWSC_CHECK_ARG(d >= 0, "negative extent in shape " + ShapeString(shape));
    n *= static_cast<size_t>(d);
  }
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, float fill)
    : shape_(std::move(shape)), data_(NumElements(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  PWSC_CHECK_ARG(NumElements(shape_) == data_.size(),
                 "tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + ShapeString(shape_));
}

bool Tensor::AllFinite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::Reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

void Tensor::Fill(float v) { std::fill(data_.begin(), data_.end(), v); }

void CheckFinite(const Tensor& t, const char* op) {
  if (!t.AllFinite()) {
    Fail(ErrorCode::kNumeric,
         std::string(op) + " produced a non-finite value, shape " +
             ShapeString(t.shape()));
  }
}

void CheckSameShape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    Fail(ErrorCode::kInvalidArgument, std::string(op) + ": shape mismatch " +
                                          ShapeString(a.shape()) + " vs " +
                                          ShapeString(b.shape()));
  }
}

}  // namespace pwsc
