// rkd/nn/tensor.cc
//
// Copyright 2026  The rkd authors
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

#include "rkd/nn/tensor.h"

#include <unordered_set>

#include "rkd/common/error.h"

namespace rkd::nn {

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

Tensor Tensor::leaf(std::vector<int> shape, std::vector<double> data,
                    bool requires_grad, std::string name) {
  auto node = std::make_shared<Node>();
  int64_t n = 1;
  for (int d : shape) n *= d;
  if (static_cast<int64_t>(data.size()) != n)
    throw ShapeError("Tensor::leaf: data size " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  node->shape = std::move(shape);
  node->val = std::move(data);
  node->requires_grad = requires_grad;
  node->name = std::move(name);
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad,
                     std::string name) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return leaf(std::move(shape), std::vector<double>(n, 0.0), requires_grad,
              std::move(name));
}

Tensor Tensor::scalar(double v) { return leaf({1}, {v}); }

double Tensor::item() const {
  if (!node_ || node_->numel() != 1)
    throw ShapeError("Tensor::item: tensor is not a scalar");
  return node_->val[0];
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

void backward(const Tensor& root) {
  if (!root.defined() || root.numel() != 1)
    throw ShapeError("backward: root must be a defined scalar tensor");

  // Iterative post-order DFS for the topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.push_back({root.node().get(), 0});
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* parent = node->parents[idx++].get();
      if (parent->requires_grad && !visited.count(parent)) {
        visited.insert(parent);
        stack.push_back({parent, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->ensure_grad();
  root.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backprop) node->backprop(*node);
  }
}

}  // namespace rkd::nn
