// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "qapforge/instance.hpp"

namespace qapforge::testing {

/// Two locations one unit apart with unit flow between the two facilities.
inline QapInstance unit_pair() {
  Matrix coords(2, 2);
  coords << 0, 0, 1, 0;
  Matrix flows(2, 2);
  flows << 0, 1, 1, 0;
  return QapInstance(coords, flows);
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Independent oracle: plain quadruple loop over the 0/1 matrix X with
/// X[i][k] = 1 when facility i sits at location k.
inline double objective_by_x(const QapInstance& inst, const std::vector<int>& perm) {
  const int n = inst.n();
  std::vector<std::vector<int>> x(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), 0));
  for (int k = 0; k < n; ++k) x[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])][static_cast<std::size_t>(k)] = 1;
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          total += inst.flow(i, j) * inst.distance(k, l) * x[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
                   x[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)];
  return total;
}

/// Brute-force minimum over all n! permutations.
inline double brute_force_min(const QapInstance& inst) {
  std::vector<int> p(static_cast<std::size_t>(inst.n()));
  std::iota(p.begin(), p.end(), 0);
  double best = INFINITY;
  do {
    best = std::min(best, objective_by_x(inst, p));
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

inline std::filesystem::path scratch_dir(const char* name) {
  auto p = std::filesystem::temp_directory_path() / "qapforge_tests" / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace qapforge::testing
