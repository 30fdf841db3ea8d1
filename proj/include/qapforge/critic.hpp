// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>

#include "qapforge/mdp.hpp"
#include "qapforge/nn/tape.hpp"

namespace qapforge {

/// State-value MLP: (2n^2 + 2n) -> 512 -> 1024 -> 1, ReLU on the hidden
/// layers and a linear output.
class CriticModel {
 public:
  static constexpr int kHidden1 = 512;
  static constexpr int kHidden2 = 1024;

  CriticModel(int n, std::uint64_t seed);

  int n() const noexcept { return n_; }
  int input_width() const noexcept { return 2 * n_ * n_ + 2 * n_; }
  nn::ParameterStore& params() noexcept { return params_; }
  const nn::ParameterStore& params() const noexcept { return params_; }

 private:
  int n_;
  nn::ParameterStore params_;
};

/// Row-major F, row-major D, then 2n slots: the selected indices in
/// selection order as index / n, with -1 for steps not yet taken.
nn::Matrix encode_state(const QapInstance& instance, const MdpState& state);

/// Encodings of the prefixes of length 0..steps-1 of `sequence`, one per
/// column: (2n^2 + 2n) x steps.
nn::Matrix encode_prefixes(const QapInstance& instance, std::span<const int> sequence, int steps);

/// Values for a batch of encoded states (one per column); returns 1 x cols.
nn::Var critic_forward(nn::Tape& tape, const CriticModel& model, nn::Var encoded);

/// V(s) for a single state. The network is never queried at the terminal
/// state; the trainer uses 0 there.
double value(const CriticModel& model, const QapInstance& instance, const MdpState& state);

}  // namespace qapforge
