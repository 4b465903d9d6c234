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

#include "adapter3d/autograd.hpp"

#include <algorithm>
#include <unordered_set>

#include "adapter3d/errors.hpp"

namespace adapter3d::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::vector<double>& Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

Var Var::constant(Shape shape, std::vector<double> values) {
  return leaf(std::move(shape), std::move(values), false);
}

Var Var::constant_scalar(double value) { return constant({}, {value}); }

Var Var::zeros(Shape shape) {
  auto n = numel(shape);
  return constant(std::move(shape), std::vector<double>(n, 0.0));
}

Var Var::leaf(Shape shape, std::vector<double> values, bool requires_grad) {
  if (numel(shape) != values.size()) {
    throw ConfigError("leaf shape " + shape_string(shape) + " does not match " +
                      std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Var(std::move(node));
}

double Var::item() const {
  if (size() != 1) throw ConfigError("item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

void Var::set_requires_grad(bool flag) {
  if (node_->backward_fn) throw InternalError("set_requires_grad on a non-leaf node");
  node_->requires_grad = flag;
}

std::vector<double>& Var::mutable_value() {
  if (node_->backward_fn) throw InternalError("mutable_value on a non-leaf node");
  return node_->value;
}

void Var::zero_grad() { node_->grad.clear(); }

Var Var::detach() const { return constant(node_->shape, node_->value); }

Var make_result(Shape shape, std::vector<double> values, std::vector<Var> inputs,
                std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  if (node->value.size() != numel(node->shape)) {
    throw InternalError("op produced " + std::to_string(node->value.size()) +
                        " values for shape " + shape_string(node->shape));
  }
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Var& v) { return v.requires_grad(); });
  if (any) {
    node->requires_grad = true;
    node->backward_fn = std::move(backward_fn);
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.shared());
  }
  return Var(std::move(node));
}

namespace {

std::vector<Node*> topo_order(Node* root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  // (node, next-input-index) frames for an iterative post-order DFS.
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

void backward(const Var& output, std::span<const double> seed) {
  Node* root = output.node();
  if (!root->requires_grad) return;
  if (seed.size() != root->value.size()) throw ConfigError("backward seed size mismatch");
  auto& g = root->ensure_grad();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += seed[i];
  auto order = topo_order(root);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

void backward(const Var& scalar_output) {
  if (scalar_output.size() != 1) throw ConfigError("backward() needs a scalar output");
  const double one = 1.0;
  backward(scalar_output, std::span<const double>(&one, 1));
}

}  // namespace adapter3d::ad
