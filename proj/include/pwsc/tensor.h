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

#ifndef PWSC_TENSOR_H_
#define PWSC_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pwsc {

// Extents in N, C, H, W order for images.
using Shape = std::vector<int>;

size_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Dense binary32 array. Plain value type; gradients live on the Tape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  std::vector<float>& storage() { return data_; }
  const std::vector<float>& storage() const { return data_; }
  float* ptr() { return data_.data(); }
  const float* ptr() const { return data_.data(); }

  float& operator[](size_t i) { return data_[i]; }
  float operator[](size_t i) const { return data_[i]; }

  // NCHW element access; requires rank 4.
  float& at(int n, int c, int h, int w) { return data_[Offset(n, c, h, w)]; }
  float at(int n, int c, int h, int w) const {
    return data_[Offset(n, c, h, w)];
  }

  bool AllFinite() const;
  Tensor Reshaped(Shape shape) const;
  void Fill(float v);

 private:
  size_t Offset(int n, int c, int h, int w) const {
    return ((static_cast<size_t>(n) * shape_[1] + c) * shape_[2] + h) *
               shape_[3] +
           w;
  }

  Shape shape_;
  std::vector<float> data_;
};

// Throws ErrorCode::kNumeric naming `op` if any value is NaN or Inf.
void CheckFinite(const Tensor& t, const char* op);

// Throws ErrorCode::kInvalidArgument when shapes differ.
void CheckSameShape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace pwsc

#endif  // PWSC_TENSOR_H_
