// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "qapforge/instance.hpp"

namespace qapforge {

inline constexpr int kSwapIterationLimit = 1000;

enum class SwapRule {
  /// Accept the first improving facility pair in lexicographic (i, j) order
  /// and keep scanning from the updated assignment.
  kFirstImprovement,
  /// Scan all pairs, then apply the single best improving swap.
  kBestImprovement,
};

struct SwapResult {
  Assignment assignment;
  double cost = 0.0;
  int iterations_used = 0;
  bool converged = false;
};

/// Called after every accepted swap with the facilities exchanged and the
/// cost before and after. Used by tests to check monotonicity.
using SwapObserver = std::function<void(int i, int j, double before, double after)>;

/// 2-exchange local search from the identity assignment. One outer
/// iteration is a full scan of facility pairs; the search stops after an
/// iteration with no accepted swap or after 1000 iterations.
SwapResult swap_solve(const QapInstance& instance, SwapRule rule = SwapRule::kFirstImprovement,
                      const SwapObserver& observer = {});

/// Cost change from exchanging the locations of facilities i and j, in
/// O(n). `loc_of` maps facility -> location.
double swap_delta(const QapInstance& instance, std::span<const int> loc_of, int i, int j);

/// (c_sol - c_swap) / c_swap. Throws InvalidInput when c_swap <= 0.
double percentage_gap(double c_sol, double c_swap);

struct RandomBaseline {
  double mean = 0.0;
  double std_error = 0.0;
  int samples = 0;
};

/// Monte Carlo cost over uniformly random assignments.
RandomBaseline random_baseline(const QapInstance& instance, SplitMix64& rng, int samples);

}  // namespace qapforge
