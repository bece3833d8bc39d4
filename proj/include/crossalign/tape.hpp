/*
 * Copyright 2026 The crossalign Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "crossalign/tensor.hpp"

namespace crossalign {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor2D& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Per-node gradients produced by Tape::backward.
class Gradients {
 public:
  explicit Gradients(std::vector<Tensor2D> grads) : grads_(std::move(grads)) {}
  /// d(loss)/d(var); a zero tensor of var's shape when the loss does not depend on it.
  Tensor2D of(const Var& var) const;

 private:
  std::vector<Tensor2D> grads_;
};

/// Linear record of matrix-valued primitive operations. Nodes are appended in
/// evaluation order, so operands always precede results and a reverse sweep is
/// a valid topological order.
class Tape {
 public:
  /// Accumulates into the gradient slots of a node's operands.
  using BackwardFn = std::function<void(const Tensor2D& grad_out, std::vector<Tensor2D>& grads)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor2D value);
  Var parameter(Tensor2D value);

  /// Records a derived node. `backward` is only invoked when some input needs a gradient.
  Var record(Tensor2D value, std::initializer_list<Var> inputs, BackwardFn backward);

  const Tensor2D& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Reverse sweep from a 1x1 loss node. Throws ContractError otherwise.
  Gradients backward(const Var& loss) const;

  static void accumulate(std::vector<Tensor2D>& grads, std::size_t id, const Tensor2D& delta);

 private:
  struct Node {
    Tensor2D value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

/// Differentiable primitives. All operands must live on the same tape.
namespace ad {

Var affine(const Var& x, const Var& w, const Var& b);
Var matmul(const Var& a, const Var& b);
/// a * b^T (pairwise row dot products).
Var matmul_bt(const Var& a, const Var& b);
Var relu(const Var& x);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double factor);
Var add_scalar(const Var& x, double offset);
Var exp(const Var& x);
/// Subgradient 0 where the input is exactly 0.
Var sqrt(const Var& x);
/// Subgradient 0 where the input is exactly 0.
Var abs(const Var& x);
/// Gradient passes strictly inside (lo, hi) and on the bounds themselves, zero outside.
Var clamp(const Var& x, double lo, double hi);
Var slice_cols(const Var& x, std::size_t begin, std::size_t count);
Var gather_rows(const Var& x, std::vector<std::size_t> rows);
Var l2_normalize_rows(const Var& x);
/// N x D -> N x 1.
Var row_sum(const Var& x);
/// Any shape -> 1 x 1.
Var sum(const Var& x);
/// Sum of elementwise product with a constant weight matrix -> 1 x 1.
Var weighted_sum(const Var& x, Tensor2D weights);
/// Row-wise log(sum_j mask_ij * exp(x_ij)) -> N x 1, max-shifted. Every row
/// needs at least one unmasked entry.
Var masked_logsumexp_rows(const Var& x, Tensor2D mask);
/// z = mu + exp(log_var / 2) * noise, noise held constant.
Var reparameterize(const Var& mu, const Var& log_var, Tensor2D noise);

}  // namespace ad
}  // namespace crossalign
