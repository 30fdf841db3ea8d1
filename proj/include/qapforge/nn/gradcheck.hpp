// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>

#include "qapforge/nn/tape.hpp"

namespace qapforge::nn {

struct GradCheckOptions {
  double epsilon = 1e-6;
  /// Coordinates sampled per parameter; 0 checks every coordinate.
  int coords_per_param = 16;
  /// Gradients smaller than this are compared in absolute terms.
  double floor = 1e-3;
  std::uint64_t seed = 7;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  int checked = 0;
  std::string worst;
};

/// Builds a scalar from the parameters of `store` on a fresh tape.
using ScalarFn = std::function<Var(Tape&)>;

/// Compares tape gradients with central differences
/// (f(x + eps) - f(x - eps)) / (2 eps) on a random subset of coordinates of
/// every trainable parameter. `fn` must be deterministic.
GradCheckResult gradient_check(const ScalarFn& fn, ParameterStore& store,
                               const GradCheckOptions& options = {});

}  // namespace qapforge::nn
