// SPDX-License-Identifier: Apache-2.0
#include "qapforge/critic.hpp"

#include "qapforge/errors.hpp"
#include "qapforge/nn/layers.hpp"

namespace qapforge {

using nn::Matrix;

CriticModel::CriticModel(int n, std::uint64_t seed) : n_(n) {
  if (n < 1) throw InvalidInput("critic n must be >= 1");
  SplitMix64 rng(seed);
  nn::add_linear(params_, "fc0", input_width(), kHidden1, rng);
  nn::add_linear(params_, "fc1", kHidden1, kHidden2, rng);
  nn::add_linear(params_, "fc2", kHidden2, 1, rng);
}

Matrix encode_prefixes(const QapInstance& instance, std::span<const int> sequence, int steps) {
  const int n = instance.n();
  const int width = 2 * n * n + 2 * n;
  Matrix out(width, steps);
  for (int c = 0; c < steps; ++c) {
    int r = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) out(r++, c) = instance.flow(i, j);
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) out(r++, c) = instance.distance(i, j);
    }
    for (int s = 0; s < 2 * n; ++s) {
      out(r++, c) = s < c && static_cast<std::size_t>(s) < sequence.size()
                        ? static_cast<double>(sequence[static_cast<std::size_t>(s)]) / n
                        : -1.0;
    }
  }
  return out;
}

Matrix encode_state(const QapInstance& instance, const MdpState& state) {
  return encode_prefixes(instance, state.sequence(), 1 + state.t()).rightCols(1);
}

nn::Var critic_forward(nn::Tape& tape, const CriticModel& model, nn::Var encoded) {
  if (encoded.rows() != model.input_width()) {
    throw ShapeError("critic input width " + std::to_string(encoded.rows()) + ", expected " +
                     std::to_string(model.input_width()));
  }
  nn::Var h = nn::relu(nn::linear(nn::bind_linear(tape, model.params(), "fc0"), encoded));
  h = nn::relu(nn::linear(nn::bind_linear(tape, model.params(), "fc1"), h));
  return nn::linear(nn::bind_linear(tape, model.params(), "fc2"), h);
}

double value(const CriticModel& model, const QapInstance& instance, const MdpState& state) {
  if (instance.n() != model.n()) throw CompatibilityError("critic/instance size mismatch");
  nn::Tape tape(false);
  return critic_forward(tape, model, tape.constant(encode_state(instance, state))).scalar();
}

}  // namespace qapforge
