// Copyright 2026 The vqat Authors.
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
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vqat/common.hpp"
#include "vqat/rng.hpp"

namespace vqat::ad {

// A named, persistent tensor with an accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

// Owns parameters in registration order; that order is the checkpoint and
// optimizer order.
class ParameterSet {
 public:
  Parameter& add(std::string name, Matrix value);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  Parameter* find(const std::string& name);
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::span<const std::unique_ptr<Parameter>> all() const { return params_; }
  size_t size() const { return params_.size(); }
  size_t scalar_count() const;
  void zero_grad();

  ParameterSet clone() const;
  // Overwrites values from `other`; names and shapes must match.
  void assign(const ParameterSet& other);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, size_t> index_;
};

// Handle to a node of a Graph.
struct Var {
  int id = -1;
};

// Tape of eagerly evaluated ops. Nodes are appended in evaluation order,
// so reverse order is a valid topological order for backward().
class Graph {
 public:
  using Backward = std::function<void(Graph&, int)>;

  // With `grad_enabled=false` nothing is recorded for backward.
  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Var constant(Matrix m);
  // Leaf bound to `p`. Repeated calls return the same node.
  Var param(Parameter& p);

  const Matrix& value(Var v) const { return nodes_[static_cast<size_t>(v.id)].value; }
  double scalar(Var v) const { return value(v)(0, 0); }
  bool requires_grad(Var v) const { return nodes_[static_cast<size_t>(v.id)].requires_grad; }
  size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b);     // a * b
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var add_row(Var a, Var row);  // adds a 1 x n row to every row of a
  Var scale(Var a, double s);
  Var mul_const(Var a, const Matrix& m);  // elementwise
  Var gelu(Var a);
  Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-5);
  // Row-wise softmax over columns; columns with key_mask[c] == 0 get
  // exactly zero probability.
  Var masked_softmax(Var scores, std::span<const uint8_t> key_mask);
  Var dropout(Var a, double p, Rng* rng);
  Var gather_rows(Var table, std::span<const int> ids);
  Var concat_rows(std::span<const Var> parts);
  Var concat_cols(std::span<const Var> parts);
  Var slice_rows(Var a, Eigen::Index start, Eigen::Index n);
  Var slice_cols(Var a, Eigen::Index start, Eigen::Index n);
  Var sum(Var a);  // 1 x 1

  // Node with a caller-computed value. `backward` receives the output
  // gradient and must add input gradients via accumulate().
  Var custom(std::span<const Var> inputs, Matrix value,
             std::function<void(Graph&, const Matrix& out_grad)> backward);

  // Adds `delta` into the gradient slot of `v` when it requires grad.
  void accumulate(Var v, const Matrix& delta);

  // Seeds d root / d root = 1 and propagates; bound parameters receive
  // their gradients in Parameter::grad (accumulated).
  void backward(Var root);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    Backward backward;
  };

  Var push(Matrix value, bool requires_grad, Backward backward);
  bool any_requires_grad(std::initializer_list<Var> vars) const;
  const Matrix& grad_of(int id) const { return nodes_[static_cast<size_t>(id)].grad; }

  bool grad_enabled_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

}  // namespace vqat::ad
