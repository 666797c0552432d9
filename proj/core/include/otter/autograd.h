// Copyright 2026 The Otter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "otter/parameter.h"
#include "otter/tensor.h"

namespace otter {

template <typename T>
class Tape;

// Handle to a value recorded on a tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  int id = -1;

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  bool valid() const { return tape != nullptr && id >= 0; }
};

// Reverse-mode tape. One tape per forward pass; nodes are appended in
// evaluation order and `backward` walks them in reverse. Parameter leaves
// are deduplicated so repeated use of a weight accumulates into one
// gradient buffer. With gradients disabled the tape records values only.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

  Var<T> constant(Tensor<T> value);
  // Free leaf that always requires a gradient (when enabled).
  Var<T> leaf(Tensor<T> value);
  // Leaf bound to `p`; requires a gradient iff `p` has trainable elements.
  Var<T> parameter(const Parameter<T>& p);

  const Tensor<T>& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  bool has_grad(int id) const { return !nodes_[id].grad.empty(); }
  // Zero-initialized on first access.
  Tensor<T>& grad(int id);

  // Appends an op result. `op` names the op in NumericError messages.
  Var<T> record(Tensor<T> value, bool requires_grad, BackwardFn backward,
                const char* op);

  // Seeds d(loss)/d(loss) = 1 and propagates. `loss` must hold one element.
  void backward(Var<T> loss);

  // Gradient of every parameter leaf touched by the last backward pass.
  std::vector<std::pair<const Parameter<T>*, const Tensor<T>*>>
  parameter_grads() const;

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
    const Parameter<T>* param = nullptr;
  };

  bool grad_enabled_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, int> param_nodes_;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return tape->value(id);
}

namespace ops {

template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> sub(Var<T> a, Var<T> b);
// Elementwise product.
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Var<T> a, T factor);

// Rows of `table` ([vocab, width]) gathered by token id.
template <typename T>
Var<T> embedding(Var<T> table, std::span<const int> tokens);

// y = x W^T (+ b). x is [rows, in], W is [out, in], b is [out].
template <typename T>
Var<T> linear(Var<T> x, Var<T> weight);
template <typename T>
Var<T> linear(Var<T> x, Var<T> weight, Var<T> bias);

// x / sqrt(mean(x[:, :norm_dims]^2) + eps) * gamma. With norm_dims equal to
// the row width this is plain RMSNorm; smaller values give the restricted
// form where trailing coordinates are scaled but never enter the
// denominator.
template <typename T>
Var<T> rmsnorm(Var<T> x, Var<T> gamma, std::size_t norm_dims, T eps);

// Rotary embedding over each head (half-split pairing). cos/sin are
// [positions, head_dim / 2].
template <typename T>
Var<T> rope(Var<T> x, std::size_t head_dim, const Tensor<T>& cos,
            const Tensor<T>& sin);

// Causal scaled dot-product attention over `n_heads` heads laid out
// contiguously in the last axis of q, k and v ([positions, n_heads*head_dim]).
template <typename T>
Var<T> causal_attention(Var<T> q, Var<T> k, Var<T> v, std::size_t n_heads,
                        std::size_t head_dim);

// silu(gate) * up.
template <typename T>
Var<T> swiglu(Var<T> gate, Var<T> up);

template <typename T>
Var<T> sigmoid(Var<T> x);
// log(1 + exp(x)), evaluated stably.
template <typename T>
Var<T> softplus(Var<T> x);

// Softmax over the last axis.
template <typename T>
Var<T> softmax(Var<T> x);

// Columns [begin, end) of a 2-D value.
template <typename T>
Var<T> slice_cols(Var<T> x, std::size_t begin, std::size_t end);
// Row r of a 2-D value as [1, cols].
template <typename T>
Var<T> take_row(Var<T> x, std::size_t r);

template <typename T>
Var<T> sum(Var<T> x);
template <typename T>
Var<T> mean(Var<T> x);

// Mean over positions of -log softmax(logits[t])[targets[t]]. Positions with
// a negative target are skipped. Throws InputError if every target is
// skipped or any target is >= vocab.
template <typename T>
Var<T> cross_entropy(Var<T> logits, std::span<const int> targets);

// Mean over rows of (sqrt(mean(x[:norm_dims]^2)+eps) - sqrt(mean(x^2)+eps))^2.
template <typename T>
Var<T> rms_gap_sq(Var<T> x, std::size_t norm_dims, T eps);

}  // namespace ops
}  // namespace otter
