// rkd/nn/tensor.h
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

#ifndef RKD_NN_TENSOR_H_
#define RKD_NN_TENSOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace rkd::nn {

// Dense f64 tensor node in a dynamically built computation graph.
// Ops allocate a fresh node per result and register a closure that pulls
// the node's gradient into its parents' gradients.
struct Node {
  std::vector<int> shape;
  std::vector<double> val;
  std::vector<double> grad;  // allocated lazily, same numel as val
  bool requires_grad = false;
  std::string name;  // set for parameters
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;

  int64_t numel() const {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }
  void ensure_grad() {
    if (grad.size() != val.size()) grad.assign(val.size(), 0.0);
  }
};

std::string shape_str(const std::vector<int>& shape);

// Value-semantics handle onto a graph node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor leaf(std::vector<int> shape, std::vector<double> data,
                     bool requires_grad = false, std::string name = "");
  static Tensor zeros(std::vector<int> shape, bool requires_grad = false,
                      std::string name = "");
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape.at(i); }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int64_t numel() const { return node_->numel(); }

  std::vector<double>& val() { return node_->val; }
  const std::vector<double>& val() const { return node_->val; }
  std::vector<double>& grad() { return node_->grad; }
  const std::vector<double>& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  const std::string& name() const { return node_->name; }

  // Scalar accessor; throws unless numel() == 1.
  double item() const;

  std::shared_ptr<Node>& node() { return node_; }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Thread-local gradient mode.  When disabled, ops compute values only and
// record no graph (used for frozen teachers and evaluation passes).
bool grad_enabled();
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Reverse-mode sweep from a scalar root.  Visits each reachable node exactly
// once in reverse topological order and accumulates into parents' grads.
void backward(const Tensor& root);

}  // namespace rkd::nn

#endif  // RKD_NN_TENSOR_H_
