// Copyright 2026 The bevda Authors
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

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "bevda/nn/tensor.hpp"

namespace bevda::nn {

struct Node;
using Var = std::shared_ptr<Node>;

/// One value in the recorded computation graph.
///
/// A node owns its forward value and a lazily allocated gradient buffer of the
/// same shape. Non-leaf nodes keep their parents alive and carry a closure that
/// reads `grad` and accumulates into each parent's gradient buffer.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward;

  /// Gradient buffer, zero-initialized on first access.
  Tensor& grad_buffer();
  bool has_grad() const { return !grad.empty() || value.empty(); }
};

/// Leaf holding `value`; gradients accumulate into it during backward().
Var leaf(Tensor value, bool requires_grad = true);
/// Leaf that never receives gradient.
Var constant(Tensor value);

/// Creates a result node. When gradient recording is disabled or no parent
/// requires grad, the node is detached and `fn` is dropped.
Var make_result(Tensor value, std::vector<Var> parents, std::function<void(Node&)> fn);

/// Reverse pass from a scalar root. Each node is visited once, in reverse
/// topological order; gradients accumulate into existing buffers.
void backward(const Var& root);

/// Returns a gradient-free copy of the value.
Var detach(const Var& v);

bool grad_enabled();

/// Disables graph recording for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace bevda::nn
