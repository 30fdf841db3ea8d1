// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "qapforge/nn/params.hpp"

namespace qapforge::nn {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the
/// tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Tape& tape() const { return *tape_; }
  int id() const noexcept { return id_; }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1 x 1 result.
  double scalar() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so the
/// reverse of insertion order is a valid reverse topological order.
/// Single-threaded; use one tape per rollout.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return record_; }

  Var constant(Matrix value);
  /// Leaf bound to a stored parameter. The value is borrowed, so the store
  /// must not change while the tape is alive.
  Var parameter(const ParameterStore& store, int index);
  Var parameter(const ParameterStore& store, std::string_view name);

  /// Appends a computed node. `inputs` decide whether it needs a gradient.
  Var push(Matrix value, std::span<const Var> inputs, Backward backward);

  const Matrix& value(int id) const;
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  /// Gradient slot of a node, zero-initialized on first access.
  Matrix& grad(int id);
  bool has_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad.size() > 0; }

  /// Seeds d(out)/d(out) = 1 for a 1 x 1 `out` and propagates to all nodes.
  void backward(Var out);

  /// Gradients of parameter leaves bound to `store`, summed per parameter.
  /// Parameters never touched get zero matrices.
  GradientSet gradients(const ParameterStore& store) const;

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix owned;
    const Matrix* borrowed = nullptr;
    Matrix grad;
    Backward backward;
    bool needs_grad = false;
    const ParameterStore* store = nullptr;
    int param_index = -1;
  };

  bool record_;
  std::vector<Node> nodes_;
};

// Primitive operations. Each records a node with its backward rule.

Var matmul(Var a, Var b);
/// Same shapes, or `b` a column vector broadcast across the columns of `a`.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// 1 - a
Var one_minus(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var log(Var a);
Var square(Var a);
Var transpose(Var a);
Var concat_rows(Var top, Var bottom);
/// rows x 1 -> rows x count
Var repeat_cols(Var column, int count);
Var column(Var a, int j);
/// 1 x 1 entry
Var element(Var a, int i, int j);
/// 1 x 1 sum of all entries
Var sum(Var a);
/// Gradient stops here.
Var detach(Var a);

/// Inverted dropout: entries kept with probability 1 - p and scaled by
/// 1 / (1 - p). Caller skips it outside training.
Var dropout(Var a, double p, SplitMix64& rng);

/// Softmax over all entries of `logits` (treated as one flat vector).
Var softmax(Var logits);
/// Softmax restricted to entries with mask != 0; masked entries are exactly
/// zero. Throws DegenerateMaskError when nothing is allowed.
Var masked_softmax(Var logits, std::span<const char> mask);
/// log of masked_softmax on allowed entries; 0 (constant) on masked ones.
Var masked_log_softmax(Var logits, std::span<const char> mask);
/// 1 x 1 entropy -sum p log p of masked_softmax(logits).
Var masked_entropy(Var logits, std::span<const char> mask);

/// Value-only masked softmax, shared with the tape op.
Matrix masked_softmax_value(const Matrix& logits, std::span<const char> mask);

}  // namespace qapforge::nn
