// SPDX-License-Identifier: Apache-2.0
#include "qapforge/nn/layers.hpp"

#include "qapforge/errors.hpp"

namespace qapforge::nn {

namespace {
std::string join(std::string_view prefix, std::string_view leaf) {
  std::string s(prefix);
  s += '.';
  s += leaf;
  return s;
}
}  // namespace

void add_linear(ParameterStore& store, const std::string& prefix, int in, int out,
                SplitMix64& rng, bool bias) {
  store.add(join(prefix, "weight"), xavier_init(rng, out, in));
  if (bias) store.add(join(prefix, "bias"), Matrix::Zero(out, 1));
}

LinearVars bind_linear(Tape& tape, const ParameterStore& store, std::string_view prefix) {
  LinearVars l;
  l.weight = tape.parameter(store, join(prefix, "weight"));
  l.has_bias = store.contains(join(prefix, "bias"));
  if (l.has_bias) l.bias = tape.parameter(store, join(prefix, "bias"));
  return l;
}

Var linear(const LinearVars& layer, Var x) {
  Var y = matmul(layer.weight, x);
  return layer.has_bias ? add(y, layer.bias) : y;
}

void add_gru(ParameterStore& store, const std::string& prefix, int d_in, int d_hidden,
             SplitMix64& rng) {
  for (const char* gate : {"z", "r", "h"}) {
    store.add(join(prefix, std::string("w") + gate), xavier_init(rng, d_hidden, d_in));
    store.add(join(prefix, std::string("u") + gate), xavier_init(rng, d_hidden, d_hidden));
    store.add(join(prefix, std::string("b") + gate), Matrix::Zero(d_hidden, 1));
  }
}

GruVars bind_gru(Tape& tape, const ParameterStore& store, std::string_view prefix) {
  auto p = [&](const char* leaf) { return tape.parameter(store, join(prefix, leaf)); };
  return {p("wz"), p("uz"), p("bz"), p("wr"), p("ur"), p("br"), p("wh"), p("uh"), p("bh")};
}

Var gru_cell(const GruVars& g, Var x, Var h) {
  if (x.cols() != 1 || h.cols() != 1) throw ShapeError("gru_cell expects column vectors");
  if (g.wz.cols() != x.rows() || g.uz.cols() != h.rows()) {
    throw ShapeError("gru_cell: input/hidden widths do not match parameters");
  }
  Var z = sigmoid(add(add(matmul(g.wz, x), matmul(g.uz, h)), g.bz));
  Var r = sigmoid(add(add(matmul(g.wr, x), matmul(g.ur, h)), g.br));
  Var c = tanh(add(add(matmul(g.wh, x), matmul(g.uh, mul(r, h))), g.bh));
  return add(mul(one_minus(z), h), mul(z, c));
}

}  // namespace qapforge::nn
