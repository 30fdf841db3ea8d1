// SPDX-License-Identifier: Apache-2.0
#include "qapforge/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace qapforge::nn {

namespace {
double evaluate(const ScalarFn& fn) {
  Tape tape(false);
  return fn(tape).scalar();
}
}  // namespace

GradCheckResult gradient_check(const ScalarFn& fn, ParameterStore& store,
                               const GradCheckOptions& opt) {
  GradientSet analytic;
  {
    Tape tape;
    Var out = fn(tape);
    tape.backward(out);
    analytic = tape.gradients(store);
  }
  SplitMix64 rng(opt.seed);
  GradCheckResult result;
  for (int p = 0; p < store.size(); ++p) {
    if (!store.trainable(p)) continue;
    Matrix& value = store.value(p);
    const auto total = static_cast<std::uint64_t>(value.size());
    std::vector<Eigen::Index> coords;
    if (opt.coords_per_param <= 0 || total <= static_cast<std::uint64_t>(opt.coords_per_param)) {
      for (Eigen::Index k = 0; k < value.size(); ++k) coords.push_back(k);
    } else {
      for (int s = 0; s < opt.coords_per_param; ++s) {
        coords.push_back(static_cast<Eigen::Index>(rng.below(total)));
      }
    }
    for (Eigen::Index k : coords) {
      const double saved = value(k);
      value(k) = saved + opt.epsilon;
      const double up = evaluate(fn);
      value(k) = saved - opt.epsilon;
      const double down = evaluate(fn);
      value(k) = saved;
      const double numeric = (up - down) / (2.0 * opt.epsilon);
      const double exact = analytic.grads[static_cast<std::size_t>(p)](k);
      const double denom = std::max({std::abs(numeric), std::abs(exact), opt.floor});
      const double rel = std::abs(numeric - exact) / denom;
      ++result.checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst = store.name(p) + "[" + std::to_string(k) + "]";
      }
    }
  }
  return result;
}

}  // namespace qapforge::nn
