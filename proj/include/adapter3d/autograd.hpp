// Copyright 2026 The adapter3d Authors. All Rights Reserved.
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

#ifndef ADAPTER3D_AUTOGRAD_HPP
#define ADAPTER3D_AUTOGRAD_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace adapter3d::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into inputs that require grad.
  std::function<void(Node&)> backward_fn;

  std::vector<double>& ensure_grad();
};

/// Handle to a node of a dynamically recorded computation graph.
///
/// Values are row-major doubles. Copying a Var aliases the same node; use
/// `detach()` to obtain an independent constant.
class Var {
 public:
  Var() = default;

  static Var constant(Shape shape, std::vector<double> values);
  static Var constant_scalar(double value);
  static Var zeros(Shape shape);
  static Var leaf(Shape shape, std::vector<double> values, bool requires_grad);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const double> value() const { return node_->value; }
  double operator[](std::size_t i) const { return node_->value[i]; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  // Only meaningful on leaves; intermediate nodes infer it from inputs.
  void set_requires_grad(bool flag);

  // Leaf values may be rewritten in place (optimizer steps, finite differences).
  std::vector<double>& mutable_value();

  // Empty span when no gradient has been accumulated.
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad();

  Var detach() const;
  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

 private:
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;

  friend Var make_result(Shape, std::vector<double>, std::vector<Var>,
                         std::function<void(Node&)>);
};

/// Creates an op output. The backward closure and inputs are dropped when no
/// input requires grad, so constant subgraphs do not retain memory.
Var make_result(Shape shape, std::vector<double> values, std::vector<Var> inputs,
                std::function<void(Node&)> backward_fn);

/// Reverse-mode sweep from a scalar. Leaf gradients accumulate across calls.
void backward(const Var& scalar_output);

/// Reverse-mode sweep seeded with an explicit output cotangent.
void backward(const Var& output, std::span<const double> seed);

}  // namespace adapter3d::ad

#endif  // ADAPTER3D_AUTOGRAD_HPP
