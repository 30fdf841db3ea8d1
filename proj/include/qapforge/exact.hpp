// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "qapforge/instance.hpp"

namespace qapforge {

inline constexpr int kExactMaxSize = 11;

struct ExactResult {
  Assignment assignment;
  double cost = 0.0;
};

/// Exhaustive search over all n! assignments with pruning on the
/// accumulated partial cost. Throws SizeLimitError for n > 11.
ExactResult exact_solve(const QapInstance& instance);

}  // namespace qapforge
