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

#include "bevda/nn/autodiff.hpp"

#include <unordered_set>

#include "bevda/errors.hpp"

namespace bevda::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

Tensor& Node::grad_buffer() {
  if (grad.shape() != value.shape()) grad = Tensor(value.shape(), 0.0);
  return grad;
}

Var leaf(Tensor value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return node;
}

Var constant(Tensor value) { return leaf(std::move(value), false); }

Var make_result(Tensor value, std::vector<Var> parents, std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (!g_grad_enabled) return node;
  bool any = false;
  for (const auto& p : parents) any = any || p->requires_grad;
  if (!any) return node;
  node->requires_grad = true;
  node->parents = std::move(parents);
  node->backward = std::move(fn);
  return node;
}

void backward(const Var& root) {
  require(root->value.size() == 1, "backward() requires a scalar root");
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order of the graph.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (!node->backward) continue;
    node->grad_buffer();
    for (auto& p : node->parents)
      if (p->requires_grad) p->grad_buffer();
    node->backward(*node);
  }
}

Var detach(const Var& v) { return constant(v->value); }

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

}  // namespace bevda::nn
