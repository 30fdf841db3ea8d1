// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "qapforge/errors.hpp"
#include "qapforge/nn/adam.hpp"
#include "qapforge/nn/gradcheck.hpp"
#include "qapforge/nn/layers.hpp"
#include "qapforge/nn/tape.hpp"

using namespace qapforge;
using namespace qapforge::nn;

namespace {

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index j = 0;
  for (double x : v) m(0, j++) = x;
  return m;
}

Matrix random_matrix(SplitMix64& rng, int r, int c, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = rng.uniform(lo, hi);
  return m;
}

}  // namespace

TEST_CASE("masked softmax examples") {
  Tape tape;
  const std::vector<char> all{1, 1, 1};
  Matrix p = masked_softmax(tape.constant(row({0, 0, 0})), all).value();
  for (int j = 0; j < 3; ++j) CHECK(p(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const std::vector<char> mid{1, 0, 1};
  p = masked_softmax(tape.constant(row({5, 100, 5})), mid).value();
  CHECK(p(0, 0) == 0.5);
  CHECK(p(0, 1) == 0.0);
  CHECK(p(0, 2) == 0.5);
  const std::vector<char> none{0, 0, 0};
  CHECK_THROWS_AS(masked_softmax(tape.constant(row({1, 2, 3})), none), DegenerateMaskError);
  CHECK_THROWS_AS(masked_softmax(tape.constant(row({1, 2})), all), ShapeError);
  const std::vector<char> single{1};
  CHECK(masked_softmax(tape.constant(row({-40})), single).value()(0, 0) == 1.0);
}

TEST_CASE("softmax normalization over random logits") {
  SplitMix64 rng(1);
  Tape tape(false);
  for (int i = 0; i < 1000; ++i) {
    const int n = 1 + static_cast<int>(rng.below(20));
    const Matrix p = softmax(tape.constant(random_matrix(rng, 1, n, -30, 30))).value();
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("masked entropy of a uniform distribution") {
  Tape tape;
  const std::vector<char> mask{1, 0, 1, 1};
  CHECK(masked_entropy(tape.constant(row({2, 9, 2, 2})), mask).scalar() ==
        doctest::Approx(std::log(3.0)).epsilon(1e-14));
}

TEST_CASE("gru with zero parameters halves the hidden state") {
  Tape tape;
  const int d = 4;
  auto zeros = [&](int r, int c) { return tape.constant(Matrix::Zero(r, c)); };
  GruVars g{zeros(d, 3), zeros(d, d), zeros(d, 1), zeros(d, 3), zeros(d, d),
            zeros(d, 1), zeros(d, 3), zeros(d, d), zeros(d, 1)};
  SplitMix64 rng(2);
  const Matrix h = random_matrix(rng, d, 1);
  const Var out = gru_cell(g, tape.constant(random_matrix(rng, 3, 1)), tape.constant(h));
  CHECK(out.rows() == d);
  CHECK(out.cols() == 1);
  CHECK((out.value() - 0.5 * h).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pointwise conv example and column equivariance") {
  Tape tape;
  Matrix w(1, 2);
  w << 1, 1;
  Matrix x(2, 2);
  x << 1, 2, 3, 4;
  LinearVars layer{tape.constant(w), tape.constant(Matrix::Zero(1, 1)), true};
  const Matrix y = pointwise_conv(layer, tape.constant(x)).value();
  CHECK(y(0, 0) == 4.0);
  CHECK(y(0, 1) == 6.0);

  SplitMix64 rng(3);
  LinearVars big{tape.constant(random_matrix(rng, 5, 2)), tape.constant(random_matrix(rng, 5, 1)), true};
  const Matrix in = random_matrix(rng, 2, 6);
  Matrix swapped = in;
  swapped.col(1).swap(swapped.col(4));
  const Matrix a = pointwise_conv(big, tape.constant(in)).value();
  Matrix b = pointwise_conv(big, tape.constant(swapped)).value();
  b.col(1).swap(b.col(4));
  CHECK(a == b);
}

TEST_CASE("xavier init") {
  SplitMix64 rng(4);
  const Matrix w = xavier_init(rng, 100, 100);
  const double bound = xavier_bound(100, 100);
  CHECK(bound == doctest::Approx(std::sqrt(6.0 / 200.0)));
  CHECK(w.cwiseAbs().maxCoeff() <= bound);
  const double mean = w.mean();
  const double var = (w.array() - mean).square().sum() / (w.size() - 1);
  CHECK(std::abs(var / (2.0 / 200.0) - 1.0) < 0.2);
  SplitMix64 again(4);
  CHECK(xavier_init(again, 100, 100) == w);
  CHECK(xavier_bound(8, 1) == doctest::Approx(std::sqrt(6.0 / 9.0)));
}

TEST_CASE("adam") {
  ParameterStore store;
  store.add("x", Matrix::Constant(1, 1, 3.0));
  AdamState st = AdamState::zeros_like(store);
  GradientSet g = GradientSet::zeros_like(store);
  g.grads[0](0, 0) = 1.0;
  adam_step(store, g, st, {0.1, 0.9, 0.999, 1e-8});
  CHECK(store.value(0)(0, 0) == doctest::Approx(2.9).epsilon(1e-7));

  ParameterStore s2;
  s2.add("a", Matrix::Constant(2, 2, 1.5));
  AdamState st2 = AdamState::zeros_like(s2);
  adam_step(s2, GradientSet::zeros_like(s2), st2, {});
  CHECK(s2.value(0) == Matrix::Constant(2, 2, 1.5));

  GradientSet missing;
  CHECK_THROWS_AS(adam_step(s2, missing, st2, {}), ConsistencyError);

  auto run = [] {
    ParameterStore s;
    SplitMix64 rng(5);
    s.add("w", random_matrix(rng, 3, 3));
    AdamState a = AdamState::zeros_like(s);
    for (int k = 0; k < 5; ++k) {
      GradientSet gg = GradientSet::zeros_like(s);
      gg.grads[0] = random_matrix(rng, 3, 3);
      adam_step(s, gg, a, {});
    }
    return s.value(0);
  };
  CHECK(run() == run());
}

TEST_CASE("dropout") {
  SplitMix64 rng(6);
  Tape tape;
  const Var x = tape.constant(Matrix::Ones(200, 200));
  const Matrix y = dropout(x, 0.1, rng).value();
  const double kept = (y.array() != 0.0).cast<double>().mean();
  CHECK(std::abs(kept - 0.9) < 0.01);
  CHECK(std::abs(y.mean() - 1.0) < 0.02);
  CHECK(y.maxCoeff() == doctest::Approx(1.0 / 0.9));
  CHECK(dropout(x, 0.0, rng).value() == x.value());
}

TEST_CASE("gradient check of a quadratic") {
  SplitMix64 rng(7);
  ParameterStore store;
  store.add("x", random_matrix(rng, 6, 1));
  const auto r = gradient_check([&](Tape& t) { return sum(square(t.parameter(store, 0))); }, store,
                                {1e-6, 0, 1e-3, 1});
  CHECK(r.max_rel_error < 1e-8);
}

TEST_CASE("gradient check of every primitive") {
  SplitMix64 rng(8);
  ParameterStore store;
  store.add("a", random_matrix(rng, 3, 4));
  store.add("b", random_matrix(rng, 4, 5));
  store.add("c", random_matrix(rng, 3, 1));
  store.add("d", random_matrix(rng, 3, 5, 0.5, 2.0));
  store.add("e", random_matrix(rng, 1, 6));
  const std::vector<char> mask{1, 1, 0, 1, 0, 1};
  auto fn = [&](Tape& t) {
    const Var a = t.parameter(store, "a");
    const Var b = t.parameter(store, "b");
    const Var c = t.parameter(store, "c");
    const Var d = t.parameter(store, "d");
    const Var e = t.parameter(store, "e");
    const Var ab = add(matmul(a, b), c);                      // 3 x 5, broadcast bias
    const Var s1 = mul(sigmoid(ab), tanh(sub(ab, d)));
    const Var s2 = add(relu(scale(ab, 1.7)), one_minus(log(d)));
    const Var st = concat_rows(s1, transpose(transpose(s2)));  // 6 x 5
    const Var rep = repeat_cols(column(st, 2), 3);
    const Var sm = softmax(element(st, 1, 1));
    const Var total = add(add(sum(square(rep)), sum(mul(st, st))), sm);
    const Var logp = masked_log_softmax(e, mask);
    const Var probs = masked_softmax(scale(e, 2.0), mask);
    const Var ent = masked_entropy(e, mask);
    return add(add(total, sum(mul(logp, probs))), scale(ent, 3.0));
  };
  const auto r = gradient_check(fn, store, {1e-6, 0, 1e-3, 2});
  INFO(r.worst);
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("detach stops the gradient and tape replay is deterministic") {
  SplitMix64 rng(9);
  ParameterStore store;
  store.add("x", random_matrix(rng, 3, 1));
  auto grads = [&] {
    Tape t;
    const Var x = t.parameter(store, 0);
    t.backward(sum(mul(detach(x), x)));
    return t.gradients(store).grads[0];
  };
  CHECK(grads() == store.value(0));
  CHECK(grads() == grads());
}

TEST_CASE("gru cell gradient check") {
  SplitMix64 rng(10);
  ParameterStore store;
  add_gru(store, "gru", 4, 5, rng);
  for (int i = 0; i < store.size(); ++i) {
    if (store.value(i).cols() == 1) store.value(i) = random_matrix(rng, static_cast<int>(store.value(i).rows()), 1, -0.5, 0.5);
  }
  store.add("x", random_matrix(rng, 4, 1));
  store.add("h", random_matrix(rng, 5, 1));
  const auto r = gradient_check(
      [&](Tape& t) {
        const GruVars g = bind_gru(t, store, "gru");
        Var h = t.parameter(store, "h");
        for (int k = 0; k < 3; ++k) h = gru_cell(g, t.parameter(store, "x"), h);
        return sum(mul(h, h));
      },
      store, {1e-6, 0, 1e-3, 3});
  INFO(r.worst);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("linear layer gradient check") {
  SplitMix64 rng(11);
  ParameterStore store;
  add_linear(store, "conv", 2, 6, rng);
  store.value("conv.bias") = random_matrix(rng, 6, 1);
  store.add("in", random_matrix(rng, 2, 5));
  const auto r = gradient_check(
      [&](Tape& t) {
        const LinearVars l = bind_linear(t, store, "conv");
        return sum(square(relu(pointwise_conv(l, t.parameter(store, "in")))));
      },
      store, {1e-6, 0, 1e-3, 4});
  CHECK(r.max_rel_error < 1e-4);
}
