// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "qapforge/rng.hpp"

namespace qapforge {

using Matrix = Eigen::MatrixXd;

/// perm[k] is the facility placed at location k. Eq. X[i][k] in the
/// integer-program form is the transpose view: X[perm[k]][k] == 1.
class Assignment {
 public:
  Assignment() = default;
  /// Throws InvalidInput unless `perm` is a permutation of 0..n-1.
  explicit Assignment(std::vector<int> perm);

  static Assignment identity(int n);

  int size() const noexcept { return static_cast<int>(perm_.size()); }
  int operator[](int location) const { return perm_[static_cast<std::size_t>(location)]; }
  const std::vector<int>& perm() const noexcept { return perm_; }
  /// facility -> location
  std::vector<int> inverse() const;

  friend bool operator==(const Assignment&, const Assignment&) = default;

 private:
  std::vector<int> perm_;
};

bool is_permutation_of_range(std::span<const int> perm);

/// Symmetric Koopmans-Beckmann instance: locations in the plane, a symmetric
/// zero-diagonal flow matrix, and the Euclidean distance matrix derived from
/// the coordinates. Immutable once constructed.
class QapInstance {
 public:
  /// Validates the invariants; throws InvalidInput on violation.
  QapInstance(Matrix coords, Matrix flows);

  int n() const noexcept { return static_cast<int>(coords_.rows()); }
  const Matrix& coords() const noexcept { return coords_; }
  const Matrix& flows() const noexcept { return flows_; }
  const Matrix& distances() const noexcept { return distances_; }

  double flow(int i, int j) const { return flows_(i, j); }
  double distance(int k, int l) const { return distances_(k, l); }

 private:
  Matrix coords_;
  Matrix flows_;
  Matrix distances_;
};

/// Pairwise Euclidean distances between the rows of an n x 2 matrix.
Matrix distance_matrix(const Matrix& coords);

/// sum_{k,l} F[perm[k]][perm[l]] * D[k][l]
double objective(const QapInstance& instance, const Assignment& assignment);

/// Same value through the matrix form F . (X D X^T) with an explicit 0/1 X.
/// Slow; used to cross-check `objective`.
double objective_matrix_form(const QapInstance& instance, const Assignment& assignment);

/// Coordinates i.i.d. U[0,1]^2 (x then y per location), then a raw n x n
/// U[0,1] matrix drawn row-major, symmetrized as R + R^T with zero diagonal.
QapInstance generate_instance(SplitMix64& rng, int n);

}  // namespace qapforge
