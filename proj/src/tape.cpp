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

#include "dcanet/tape.hpp"

namespace dcanet {

template <typename T>
const Tensor<T>& Var<T>::value() const {
  if (!valid()) throw Error("use of an empty Var");
  return tape_->value(id_);
}

template <typename T>
bool Var<T>::requires_grad() const {
  return valid() && tape_->requires_grad(id_);
}

template <typename T>
const Tensor<T>& Var<T>::grad() const {
  if (!valid()) throw Error("use of an empty Var");
  const Tensor<T>* g = tape_->grad_if(id_);
  if (g == nullptr) throw Error("no gradient reached this value");
  return *g;
}

template <typename T>
Var<T> Tape<T>::param(Parameter<T>& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var<T>(this, it->second);
  Var<T> v = push(p.value, true, nullptr, &p, nullptr);
  param_nodes_.emplace(&p, v.id());
  return v;
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn fn) {
  std::vector<Var<T>> in(inputs);
  return record(std::move(value), in, std::move(fn));
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, const std::vector<Var<T>>& inputs, BackwardFn fn) {
  bool needs = false;
  for (const auto& v : inputs) {
    check_owned(v);
    needs = needs || requires_grad(v.id());
  }
  if (!needs) fn = nullptr;
  return push(std::move(value), needs, std::move(fn), nullptr, &inputs);
}

template <typename T>
Var<T> Tape<T>::push(Tensor<T> value, bool requires_grad, BackwardFn fn, Parameter<T>* param,
                     const std::vector<Var<T>>* inputs) {
  if (consumed_) throw Error("cannot record on a tape after backward()");
#ifndef NDEBUG
  if (inputs != nullptr && !value.all_finite()) {
    bool finite_inputs = true;
    for (const auto& v : *inputs) finite_inputs = finite_inputs && v.value().all_finite();
    if (finite_inputs) throw Error("non-finite output from finite inputs");
  }
#else
  (void)inputs;
#endif
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  node.param = param;
  node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var<T>(this, static_cast<int>(nodes_.size()) - 1);
}

template <typename T>
void Tape<T>::check_owned(const Var<T>& v) const {
  if (v.tape() != this || v.id() < 0 || static_cast<size_t>(v.id()) >= nodes_.size()) {
    throw Error("value does not belong to this tape");
  }
}

template <typename T>
const Tensor<T>* Tape<T>::grad_if(int id) const {
  const Node& n = nodes_[static_cast<size_t>(id)];
  return n.has_grad ? &n.grad : nullptr;
}

template <typename T>
Tensor<T>& Tape<T>::grad_for(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.has_grad) {
    n.grad = Tensor<T>(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  if (!loss.valid() || loss.tape() != this) throw Error("backward: loss is not recorded on this tape");
  check_owned(loss);
  if (consumed_) throw Error("backward: tape already consumed; build a new tape per step");
  if (loss.value().numel() != 1) {
    throw Error("backward: loss must be scalar-shaped, got " + loss.value().shape().str());
  }
  // Fail before mutating anything if a parameter still holds a stale gradient.
  for (const Node& n : nodes_) {
    if (n.param != nullptr && n.param->has_grad) {
      throw Error("backward: gradient of parameter '" + n.param->name + "' was not reset since the last step");
    }
  }
  consumed_ = true;
  if (!requires_grad(loss.id())) return;

  grad_for(loss.id()).fill(T(1));
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (!n.requires_grad || !n.backward || !n.has_grad) continue;
    n.backward(*this, n.grad);
  }
  for (Node& n : nodes_) {
    if (n.param == nullptr) continue;
    if (!n.has_grad) {
      n.param->grad = Tensor<T>(n.param->value.shape());
    } else {
      n.param->grad = n.grad;
    }
    n.param->has_grad = true;
  }
}

template class Var<float>;
template class Var<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace dcanet
