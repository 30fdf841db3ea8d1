// SPDX-License-Identifier: Apache-2.0
#include "qapforge/nn/tape.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "qapforge/errors.hpp"

namespace qapforge::nn {

namespace {

std::string shape_str(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
}

void require_mask(const Matrix& logits, std::span<const char> mask) {
  if (static_cast<Eigen::Index>(mask.size()) != logits.size()) {
    throw ShapeError("mask length " + std::to_string(mask.size()) + " does not match logits " +
                     shape_str(logits));
  }
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ShapeError("scalar() on a " + shape_str(v) + " value");
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  Node node;
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::parameter(const ParameterStore& store, int index) {
  Node node;
  node.borrowed = &store.value(index);
  node.store = &store;
  node.param_index = index;
  node.needs_grad = record_ && store.trainable(index);
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::parameter(const ParameterStore& store, std::string_view name) {
  return parameter(store, store.index(name));
}

Var Tape::push(Matrix value, std::span<const Var> inputs, Backward backward) {
  Node node;
  node.owned = std::move(value);
  if (record_) {
    for (const Var& in : inputs) {
      if (needs_grad(in.id())) {
        node.needs_grad = true;
        break;
      }
    }
    if (node.needs_grad) node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Tape::value(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.borrowed ? *n.borrowed : n.owned;
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) {
    const Matrix& v = n.borrowed ? *n.borrowed : n.owned;
    n.grad = Matrix::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

void Tape::backward(Var out) {
  if (!record_) throw ConsistencyError("backward on a non-recording tape");
  if (out.value().size() != 1) throw ShapeError("backward requires a 1x1 output");
  grad(out.id())(0, 0) += 1.0;
  for (int id = out.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.backward && n.grad.size() > 0) n.backward(*this, id);
  }
}

GradientSet Tape::gradients(const ParameterStore& store) const {
  GradientSet g = GradientSet::zeros_like(store);
  for (const Node& n : nodes_) {
    if (n.store == &store && n.grad.size() > 0) {
      g.grads[static_cast<std::size_t>(n.param_index)] += n.grad;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = a.tape();
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: " + shape_str(av) + " * " + shape_str(bv));
  }
  const int ia = a.id();
  const int ib = b.id();
  const Var in[] = {a, b};
  return t.push(av * bv, in, [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.needs_grad(ia)) tp.grad(ia).noalias() += g * tp.value(ib).transpose();
    if (tp.needs_grad(ib)) tp.grad(ib).noalias() += tp.value(ia).transpose() * g;
  });
}

Var add(Var a, Var b) {
  Tape& t = a.tape();
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const int ia = a.id();
  const int ib = b.id();
  const Var in[] = {a, b};
  if (av.rows() == bv.rows() && av.cols() == bv.cols()) {
    return t.push(av + bv, in, [ia, ib](Tape& tp, int self) {
      const Matrix& g = tp.grad(self);
      if (tp.needs_grad(ia)) tp.grad(ia) += g;
      if (tp.needs_grad(ib)) tp.grad(ib) += g;
    });
  }
  if (bv.cols() == 1 && bv.rows() == av.rows()) {
    Matrix out = av;
    out.colwise() += bv.col(0);
    return t.push(std::move(out), in, [ia, ib](Tape& tp, int self) {
      const Matrix& g = tp.grad(self);
      if (tp.needs_grad(ia)) tp.grad(ia) += g;
      if (tp.needs_grad(ib)) tp.grad(ib) += g.rowwise().sum();
    });
  }
  throw ShapeError("add: " + shape_str(av) + " + " + shape_str(bv));
}

Var sub(Var a, Var b) {
  Tape& t = a.tape();
  require_same_shape(a.value(), b.value(), "sub");
  const int ia = a.id();
  const int ib = b.id();
  const Var in[] = {a, b};
  return t.push(a.value() - b.value(), in, [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.needs_grad(ia)) tp.grad(ia) += g;
    if (tp.needs_grad(ib)) tp.grad(ib) -= g;
  });
}

Var mul(Var a, Var b) {
  Tape& t = a.tape();
  require_same_shape(a.value(), b.value(), "mul");
  const int ia = a.id();
  const int ib = b.id();
  const Var in[] = {a, b};
  return t.push(a.value().cwiseProduct(b.value()), in, [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.needs_grad(ia)) tp.grad(ia) += g.cwiseProduct(tp.value(ib));
    if (tp.needs_grad(ib)) tp.grad(ib) += g.cwiseProduct(tp.value(ia));
  });
}

Var scale(Var a, double s) {
  const int ia = a.id();
  const Var in[] = {a};
  return a.tape().push(a.value() * s, in, [ia, s](Tape& tp, int self) {
    tp.grad(ia) += tp.grad(self) * s;
  });
}

Var one_minus(Var a) {
  const int ia = a.id();
  const Var in[] = {a};
  Matrix out = (1.0 - a.value().array()).matrix();
  return a.tape().push(std::move(out), in, [ia](Tape& tp, int self) {
    tp.grad(ia) -= tp.grad(self);
  });
}

Var relu(Var a) {
  const int ia = a.id();
  const Var in[] = {a};
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape().push(std::move(out), in, [ia](Tape& tp, int self) {
    const Matrix& x = tp.value(ia);
    tp.grad(ia).array() += (x.array() > 0.0).select(tp.grad(self).array(), 0.0);
  });
}

Var sigmoid(Var a) {
  const int ia = a.id();
  const Var in[] = {a};
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return a.tape().push(std::move(out), in, [ia](Tape& tp, int self) {
    const Matrix& y = tp.value(self);
    tp.grad(ia).array() += tp.grad(self).array() * y.array() * (1.0 - y.array());
  });
}

Var tanh(Var a) {
  const int ia = a.id();
  const Var in[] = {a};
  Matrix out = a.value().array().tanh().matrix();
  return a.tape().push(std::move(out), in, [ia](Tape& tp, int self) {
    const Matrix& y = tp.value(self);
    tp.grad(ia).array() += tp.grad(self).array() * (1.0 - y.array().square());
  });
}

Var log(Var a) {
  const int ia = a.id();
  const Var in[] = {a};
  Matrix out = a.value().array().log().matrix();
  return a.tape().push(std::move(out), in, [ia](Tape& tp, int self) {
    tp.grad(ia).array() += tp.grad(self).array() / tp.value(ia).array();
  });
}

Var square(Var a) {
  const int ia = a.id();
  const Var in[] = {a};
  Matrix out = a.value().array().square().matrix();
  return a.tape().push(std::move(out), in, [ia](Tape& tp, int self) {
    tp.grad(ia).array() += 2.0 * tp.grad(self).array() * tp.value(ia).array();
  });
}

Var transpose(Var a) {
  const int ia = a.id();
  const Var in[] = {a};
  Matrix out = a.value().transpose();
  return a.tape().push(std::move(out), in, [ia](Tape& tp, int self) {
    tp.grad(ia) += tp.grad(self).transpose();
  });
}

Var concat_rows(Var top, Var bottom) {
  const Matrix& tv = top.value();
  const Matrix& bv = bottom.value();
  if (tv.cols() != bv.cols()) {
    throw ShapeError("concat_rows: " + shape_str(tv) + " over " + shape_str(bv));
  }
  Matrix out(tv.rows() + bv.rows(), tv.cols());
  out.topRows(tv.rows()) = tv;
  out.bottomRows(bv.rows()) = bv;
  const int it = top.id();
  const int ib = bottom.id();
  const Eigen::Index split = tv.rows();
  const Var in[] = {top, bottom};
  return top.tape().push(std::move(out), in, [it, ib, split](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.needs_grad(it)) tp.grad(it) += g.topRows(split);
    if (tp.needs_grad(ib)) tp.grad(ib) += g.bottomRows(g.rows() - split);
  });
}

Var repeat_cols(Var c, int count) {
  if (c.value().cols() != 1) throw ShapeError("repeat_cols expects a column vector");
  Matrix out = c.value().replicate(1, count);
  const int ic = c.id();
  const Var in[] = {c};
  return c.tape().push(std::move(out), in, [ic](Tape& tp, int self) {
    tp.grad(ic) += tp.grad(self).rowwise().sum();
  });
}

Var column(Var a, int j) {
  if (j < 0 || j >= a.value().cols()) throw ShapeError("column index out of range");
  Matrix out = a.value().col(j);
  const int ia = a.id();
  const Var in[] = {a};
  return a.tape().push(std::move(out), in, [ia, j](Tape& tp, int self) {
    tp.grad(ia).col(j) += tp.grad(self);
  });
}

Var element(Var a, int i, int j) {
  if (i < 0 || j < 0 || i >= a.value().rows() || j >= a.value().cols()) {
    throw ShapeError("element index out of range");
  }
  Matrix out(1, 1);
  out(0, 0) = a.value()(i, j);
  const int ia = a.id();
  const Var in[] = {a};
  return a.tape().push(std::move(out), in, [ia, i, j](Tape& tp, int self) {
    tp.grad(ia)(i, j) += tp.grad(self)(0, 0);
  });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const int ia = a.id();
  const Var in[] = {a};
  return a.tape().push(std::move(out), in, [ia](Tape& tp, int self) {
    tp.grad(ia).array() += tp.grad(self)(0, 0);
  });
}

Var detach(Var a) { return a.tape().constant(a.value()); }

Var dropout(Var a, double p, SplitMix64& rng) {
  if (p <= 0.0) return a;
  if (p >= 1.0) throw InvalidInput("dropout probability must be < 1");
  const Matrix& x = a.value();
  Matrix keep(x.rows(), x.cols());
  const double s = 1.0 / (1.0 - p);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) keep(i, j) = rng.uniform() < p ? 0.0 : s;
  }
  Matrix out = x.cwiseProduct(keep);
  const int ia = a.id();
  const Var in[] = {a};
  return a.tape().push(std::move(out), in, [ia, keep = std::move(keep)](Tape& tp, int self) {
    tp.grad(ia) += tp.grad(self).cwiseProduct(keep);
  });
}

Var softmax(Var logits) {
  const Matrix& z = logits.value();
  const double m = z.maxCoeff();
  Matrix p = (z.array() - m).exp().matrix();
  p /= p.sum();
  const int il = logits.id();
  const Var in[] = {logits};
  return logits.tape().push(std::move(p), in, [il](Tape& tp, int self) {
    const Matrix& y = tp.value(self);
    const Matrix& g = tp.grad(self);
    const double dot = g.cwiseProduct(y).sum();
    tp.grad(il).array() += y.array() * (g.array() - dot);
  });
}

Matrix masked_softmax_value(const Matrix& z, std::span<const char> mask) {
  require_mask(z, mask);
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    if (mask[static_cast<std::size_t>(k)]) m = std::max(m, z(k));
  }
  if (m == -std::numeric_limits<double>::infinity()) {
    throw DegenerateMaskError("masked softmax with no allowed entry");
  }
  Matrix p = Matrix::Zero(z.rows(), z.cols());
  double total = 0.0;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    if (mask[static_cast<std::size_t>(k)]) total += (p(k) = std::exp(z(k) - m));
  }
  p /= total;
  return p;
}

Var masked_softmax(Var logits, std::span<const char> mask) {
  Matrix p = masked_softmax_value(logits.value(), mask);
  const int il = logits.id();
  const Var in[] = {logits};
  return logits.tape().push(std::move(p), in, [il](Tape& tp, int self) {
    const Matrix& y = tp.value(self);
    const Matrix& g = tp.grad(self);
    const double dot = g.cwiseProduct(y).sum();
    tp.grad(il).array() += y.array() * (g.array() - dot);
  });
}

Var masked_log_softmax(Var logits, std::span<const char> mask) {
  const Matrix& z = logits.value();
  Matrix p = masked_softmax_value(z, mask);
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    if (mask[static_cast<std::size_t>(k)]) m = std::max(m, z(k));
  }
  double total = 0.0;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    if (mask[static_cast<std::size_t>(k)]) total += std::exp(z(k) - m);
  }
  const double lse = m + std::log(total);
  Matrix out = Matrix::Zero(z.rows(), z.cols());
  std::vector<char> allowed(mask.begin(), mask.end());
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    if (allowed[static_cast<std::size_t>(k)]) out(k) = z(k) - lse;
  }
  const int il = logits.id();
  const Var in[] = {logits};
  return logits.tape().push(
      std::move(out), in,
      [il, p = std::move(p), allowed = std::move(allowed)](Tape& tp, int self) {
        const Matrix& g = tp.grad(self);
        double gsum = 0.0;
        for (Eigen::Index k = 0; k < g.size(); ++k) {
          if (allowed[static_cast<std::size_t>(k)]) gsum += g(k);
        }
        Matrix& gl = tp.grad(il);
        for (Eigen::Index k = 0; k < g.size(); ++k) {
          if (allowed[static_cast<std::size_t>(k)]) gl(k) += g(k) - p(k) * gsum;
        }
      });
}

Var masked_entropy(Var logits, std::span<const char> mask) {
  const Matrix& z = logits.value();
  Matrix p = masked_softmax_value(z, mask);
  Matrix logp = Matrix::Zero(z.rows(), z.cols());
  double h = 0.0;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    if (p(k) > 0.0) {
      logp(k) = std::log(p(k));
      h -= p(k) * logp(k);
    }
  }
  Matrix out(1, 1);
  out(0, 0) = h;
  const int il = logits.id();
  const Var in[] = {logits};
  return logits.tape().push(
      std::move(out), in,
      [il, h, p = std::move(p), logp = std::move(logp)](Tape& tp, int self) {
        const double g = tp.grad(self)(0, 0);
        tp.grad(il).array() -= g * p.array() * (logp.array() + h);
      });
}

}  // namespace qapforge::nn
