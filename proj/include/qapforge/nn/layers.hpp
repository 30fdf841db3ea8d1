// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "qapforge/nn/tape.hpp"

namespace qapforge::nn {

/// Affine map applied to each column: W (out x in), optional b (out x 1).
struct LinearVars {
  Var weight;
  Var bias;
  bool has_bias = true;
};

/// Registers `<prefix>.weight` (Xavier) and `<prefix>.bias` (zeros).
void add_linear(ParameterStore& store, const std::string& prefix, int in, int out,
                SplitMix64& rng, bool bias = true);
LinearVars bind_linear(Tape& tape, const ParameterStore& store, std::string_view prefix);

/// W x + b for x of shape (in x cols).
Var linear(const LinearVars& layer, Var x);

/// Kernel-width-1 convolution over an (in x n) sequence: every column goes
/// through the same affine map, so the op is equivariant to column order.
inline Var pointwise_conv(const LinearVars& layer, Var input) { return linear(layer, input); }

/// GRU cell weights, one (W, U, b) triple per gate.
struct GruVars {
  Var wz, uz, bz;
  Var wr, ur, br;
  Var wh, uh, bh;
};

void add_gru(ParameterStore& store, const std::string& prefix, int d_in, int d_hidden,
             SplitMix64& rng);
GruVars bind_gru(Tape& tape, const ParameterStore& store, std::string_view prefix);

/// z = sigmoid(Wz x + Uz h + bz)
/// r = sigmoid(Wr x + Ur h + br)
/// c = tanh(Wh x + Uh (r * h) + bh)
/// h' = (1 - z) * h + z * c
Var gru_cell(const GruVars& gru, Var x, Var h);

}  // namespace qapforge::nn
