// SPDX-License-Identifier: Apache-2.0
#include "qapforge/baselines.hpp"

#include <cmath>
#include <utility>

#include "qapforge/errors.hpp"

namespace qapforge {

double swap_delta(const QapInstance& instance, std::span<const int> loc_of, int i, int j) {
  const int n = instance.n();
  const Matrix& f = instance.flows();
  const Matrix& d = instance.distances();
  const int a = loc_of[static_cast<std::size_t>(i)];
  const int b = loc_of[static_cast<std::size_t>(j)];
  double delta = 0.0;
  for (int m = 0; m < n; ++m) {
    if (m == i || m == j) continue;
    const int lm = loc_of[static_cast<std::size_t>(m)];
    delta += (f(i, m) - f(j, m)) * (d(b, lm) - d(a, lm));
  }
  return 2.0 * delta;
}

SwapResult swap_solve(const QapInstance& instance, SwapRule rule, const SwapObserver& observer) {
  const int n = instance.n();
  Assignment current = Assignment::identity(n);
  std::vector<int> perm = current.perm();
  std::vector<int> loc_of = current.inverse();
  double cost = objective(instance, current);

  auto apply = [&](int i, int j, double delta) {
    const int a = loc_of[static_cast<std::size_t>(i)];
    const int b = loc_of[static_cast<std::size_t>(j)];
    std::swap(loc_of[static_cast<std::size_t>(i)], loc_of[static_cast<std::size_t>(j)]);
    perm[static_cast<std::size_t>(a)] = j;
    perm[static_cast<std::size_t>(b)] = i;
    const double before = cost;
    cost += delta;
    if (observer) observer(i, j, before, cost);
  };

  SwapResult result;
  while (result.iterations_used < kSwapIterationLimit) {
    bool changed = false;
    if (rule == SwapRule::kFirstImprovement) {
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          const double delta = swap_delta(instance, loc_of, i, j);
          if (delta < 0.0) {
            apply(i, j, delta);
            changed = true;
          }
        }
      }
    } else {
      double best = 0.0;
      int bi = -1;
      int bj = -1;
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          const double delta = swap_delta(instance, loc_of, i, j);
          if (delta < best) {
            best = delta;
            bi = i;
            bj = j;
          }
        }
      }
      if (bi >= 0) {
        apply(bi, bj, best);
        changed = true;
      }
    }
    ++result.iterations_used;
    if (!changed) {
      result.converged = true;
      break;
    }
  }
  result.assignment = Assignment(std::move(perm));
  // Recomputed so the reported cost carries no incremental rounding drift.
  result.cost = objective(instance, result.assignment);
  return result;
}

double percentage_gap(double c_sol, double c_swap) {
  if (!(c_swap > 0.0)) throw InvalidInput("percentage_gap requires a positive baseline cost");
  return (c_sol - c_swap) / c_swap;
}

RandomBaseline random_baseline(const QapInstance& instance, SplitMix64& rng, int samples) {
  if (samples < 1) throw InvalidInput("random_baseline requires samples >= 1");
  double mean = 0.0;
  double m2 = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double c = objective(instance, Assignment(random_permutation(instance.n(), rng)));
    const double delta = c - mean;
    mean += delta / (s + 1);
    m2 += delta * (c - mean);
  }
  RandomBaseline out;
  out.mean = mean;
  out.samples = samples;
  out.std_error = samples > 1 ? std::sqrt(m2 / (samples - 1) / samples) : 0.0;
  return out;
}

}  // namespace qapforge
