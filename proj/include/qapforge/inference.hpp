// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "qapforge/policy.hpp"

namespace qapforge {

struct InferenceResult {
  Assignment assignment;
  double cost = 0.0;
};

/// Greedy decode; the cost is the objective of the returned assignment.
/// Throws CompatibilityError when the model and instance sizes differ.
InferenceResult solve_greedy(const PolicyModel& policy, const QapInstance& instance);

struct BeamPath {
  std::vector<int> sequence;
  double log_prob = 0.0;
  double cost = 0.0;
};

/// Completed paths surviving the final step, in beam order (highest
/// cumulative log-probability first).
std::vector<BeamPath> beam_paths(const PolicyModel& policy, const QapInstance& instance,
                                 int beam_width);

/// Beam search over the alternating decoder. Survivors are ranked by
/// cumulative log-probability (ties: higher step probability, then
/// lexicographic action sequence); the lowest-cost completed path wins.
InferenceResult solve_beam(const PolicyModel& policy, const QapInstance& instance,
                           int beam_width);

}  // namespace qapforge
