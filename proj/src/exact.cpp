// SPDX-License-Identifier: Apache-2.0
#include "qapforge/exact.hpp"

#include <limits>
#include <string>
#include <vector>

#include "qapforge/errors.hpp"

namespace qapforge {

namespace {

// Depth-first over locations 0..n-1; at depth k a facility is chosen for
// location k and the pair terms against locations 0..k-1 are added. All terms
// are nonnegative, so the partial sum is a lower bound on any completion.
class BranchAndBound {
 public:
  explicit BranchAndBound(const QapInstance& inst)
      : f_(inst.flows()), d_(inst.distances()), n_(inst.n()),
        perm_(static_cast<std::size_t>(n_)), used_(static_cast<std::size_t>(n_), 0) {}

  std::vector<int> run() {
    descend(0, 0.0);
    return best_;
  }

 private:
  void descend(int k, double partial) {
    if (k == n_) {
      if (partial < best_cost_) {
        best_cost_ = partial;
        best_ = perm_;
      }
      return;
    }
    for (int fac = 0; fac < n_; ++fac) {
      if (used_[static_cast<std::size_t>(fac)]) continue;
      double add = 0.0;
      for (int prev = 0; prev < k; ++prev) {
        add += f_(fac, perm_[static_cast<std::size_t>(prev)]) * d_(prev, k);
      }
      const double next = partial + 2.0 * add;
      if (next >= best_cost_) continue;
      perm_[static_cast<std::size_t>(k)] = fac;
      used_[static_cast<std::size_t>(fac)] = 1;
      descend(k + 1, next);
      used_[static_cast<std::size_t>(fac)] = 0;
    }
  }

  const Matrix& f_;
  const Matrix& d_;
  int n_;
  std::vector<int> perm_;
  std::vector<char> used_;
  std::vector<int> best_;
  double best_cost_ = std::numeric_limits<double>::infinity();
};

}  // namespace

ExactResult exact_solve(const QapInstance& instance) {
  if (instance.n() > kExactMaxSize) {
    throw SizeLimitError("exact_solve supports n <= " + std::to_string(kExactMaxSize) +
                         ", got n = " + std::to_string(instance.n()));
  }
  // The first leaf reached is the identity, so pruning starts immediately.
  BranchAndBound search(instance);
  Assignment best(search.run());
  const double cost = objective(instance, best);
  return {std::move(best), cost};
}

}  // namespace qapforge
