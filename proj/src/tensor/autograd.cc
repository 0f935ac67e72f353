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

#include "pwsc/autograd.h"

#include "pwsc/error.h"

namespace pwsc {

const Tensor& Var::value() const { return tape_->Value(id_); }
const Tensor& Var::grad() const { return tape_->Grad(id_); }
bool Var::requires_grad() const { return tape_->RequiresGrad(id_); }

Var Tape::Leaf(Tensor value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::Record(Tensor value, std::vector<Var> parents, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const Var& p : parents) {
    PWSC_CHECK_ARG(p.tape() == this, "op inputs live on different tapes");
    node.parents.push_back(p.id());
    node.requires_grad = node.requires_grad || p.requires_grad();
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

const Tensor& Tape::Grad(int id) const {
  const Node& node = nodes_[static_cast<size_t>(id)];
  if (!node.has_grad) {
    // Lazily materialise zeros so callers always see the value's shape.
    auto& self = const_cast<Tape&>(*this);
    return self.GradBuffer(id);
  }
  return node.grad;
}

Tensor& Tape::GradBuffer(int id) {
  Node& node = nodes_[static_cast<size_t>(id)];
  if (!node.has_grad) {
    node.grad = Tensor(node.value.shape(), 0.0f);
    node.has_grad = true;
  }
  return node.grad;
}

void Tape::Backward(const Var& root) {
  PWSC_CHECK_ARG(root.tape() == this, "backward root is on another tape");
  PWSC_CHECK_ARG(root.value().size() == 1,
                 "backward root must be scalar, got shape " +
                     ShapeString(root.shape()));
  for (Node& node : nodes_) {
    node.has_grad = false;
    node.grad = Tensor();
  }
  GradBuffer(root.id())[0] = 1.0f;
  for (int id = root.id(); id >= 0; --id) {
    Node& node = nodes_[static_cast<size_t>(id)];
    if (!node.has_grad || !node.backward) continue;
    node.backward(*this, id);
  }
}

}  // namespace pwsc
