// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "qapforge/nn/params.hpp"

namespace qapforge::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moments per parameter (aligned with the store) and the
/// step count used for bias correction.
struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::int64_t step = 0;

  static AdamState zeros_like(const ParameterStore& store);
};

/// One bias-corrected Adam update of every trainable parameter. Throws
/// ConsistencyError when a trainable parameter has no gradient or shapes
/// disagree.
void adam_step(ParameterStore& store, const GradientSet& grads, AdamState& state,
               const AdamConfig& config);

}  // namespace qapforge::nn
