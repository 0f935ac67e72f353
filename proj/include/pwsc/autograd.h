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

#ifndef PWSC_AUTOGRAD_H_
#define PWSC_AUTOGRAD_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "pwsc/tensor.h"

namespace pwsc {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
// lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  // Gradient after Tape::Backward; zeros if nothing reached this node.
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

struct TapeStats {
  int64_t gdn_clamp_events = 0;
};

// Reverse-mode tape. Nodes are appended in creation order, so walking the
// node list backwards is a reverse topological order. A tape belongs to one
// thread; separate tapes are independent.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape& tape, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Leaf(Tensor value, bool requires_grad);
  Var Constant(Tensor value) { return Leaf(std::move(value), false); }

  // Records an op output. The node requires grad iff any parent does; the
  // backward closure is dropped otherwise.
  Var Record(Tensor value, std::vector<Var> parents, BackwardFn backward);

  // Clears every gradient, seeds d(root)/d(root) = 1 and propagates. `root`
  // must be a single-element tensor on this tape.
  void Backward(const Var& root);

  const Tensor& Value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Tensor& Grad(int id) const;
  bool RequiresGrad(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }
  // Mutable gradient accumulator, zero-initialised on first use.
  Tensor& GradBuffer(int id);
  const std::vector<int>& Parents(int id) const { return nodes_[static_cast<size_t>(id)].parents; }

  size_t size() const { return nodes_.size(); }
  TapeStats& stats() { return stats_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    std::vector<int> parents;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;
  TapeStats stats_;
  Tensor empty_grad_;
};

}  // namespace pwsc

#endif  // PWSC_AUTOGRAD_H_
