// Copyright 2026 The dcanet Authors. All Rights Reserved.
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

#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcanet/tensor.hpp"

namespace dcanet {

/// A learnable tensor together with its gradient slot.
///
/// The gradient is written by Tape::backward and must be cleared with
/// zero_grad() before the next backward pass may write it again.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool has_grad = false;

  void zero_grad() {
    if (grad.shape() == value.shape()) {
      grad.fill(T(0));
    } else {
      grad = Tensor<T>(value.shape());
    }
    has_grad = false;
  }
};

template <typename T>
class Tape;

/// Handle to a value recorded on a tape.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr && id_ >= 0; }
  int id() const { return id_; }
  Tape<T>* tape() const { return tape_; }

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  /// Gradient accumulated by backward(); throws if none reached this node.
  const Tensor<T>& grad() const;

 private:
  Tape<T>* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode autodiff tape. Nodes are appended in evaluation order, so
/// the recording order is already topological; backward walks it in reverse.
template <typename T>
class Tape {
 public:
  /// Receives the gradient of the node's output and accumulates into the
  /// gradients of its inputs through Tape::grad_for.
  using BackwardFn = std::function<void(Tape&, const Tensor<T>& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value) { return push(std::move(value), false, {}, nullptr, nullptr); }
  Var<T> leaf(Tensor<T> value, bool requires_grad = true) {
    return push(std::move(value), requires_grad, {}, nullptr, nullptr);
  }
  /// Records a parameter once per tape; later calls return the same node.
  Var<T> param(Parameter<T>& p);

  /// Records an operation output. The node requires a gradient when any
  /// input does; fn is dropped otherwise.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn fn);
  Var<T> record(Tensor<T> value, const std::vector<Var<T>>& inputs, BackwardFn fn);

  const Tensor<T>& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  bool requires_grad(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }
  const Tensor<T>* grad_if(int id) const;

  /// Gradient buffer of an input node, zero-allocated on first use.
  /// Only meaningful during backward; callers check requires_grad first.
  Tensor<T>& grad_for(int id);

  /// Populates gradients of every requires_grad leaf. May run once per tape.
  void backward(Var<T> loss);

  size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    bool has_grad = false;
    Parameter<T>* param = nullptr;
    BackwardFn backward;
  };

  Var<T> push(Tensor<T> value, bool requires_grad, BackwardFn fn, Parameter<T>* param,
              const std::vector<Var<T>>* inputs);
  void check_owned(const Var<T>& v) const;

  // deque keeps references to earlier nodes valid while new ones are appended.
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter<T>*, int> param_nodes_;
  bool consumed_ = false;
};

extern template class Tape<float>;
extern template class Tape<double>;
extern template class Var<float>;
extern template class Var<double>;

}  // namespace dcanet
