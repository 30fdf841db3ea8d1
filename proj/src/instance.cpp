// SPDX-License-Identifier: Apache-2.0
#include "qapforge/instance.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "qapforge/errors.hpp"

namespace qapforge {

bool is_permutation_of_range(std::span<const int> perm) {
  std::vector<char> seen(perm.size(), 0);
  for (int v : perm) {
    if (v < 0 || static_cast<std::size_t>(v) >= perm.size() || seen[static_cast<std::size_t>(v)]) {
      return false;
    }
    seen[static_cast<std::size_t>(v)] = 1;
  }
  return true;
}

Assignment::Assignment(std::vector<int> perm) : perm_(std::move(perm)) {
  if (!is_permutation_of_range(perm_)) {
    throw InvalidInput("assignment is not a permutation of 0..n-1");
  }
}

Assignment Assignment::identity(int n) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  return Assignment(std::move(p));
}

std::vector<int> Assignment::inverse() const {
  std::vector<int> inv(perm_.size());
  for (std::size_t k = 0; k < perm_.size(); ++k) {
    inv[static_cast<std::size_t>(perm_[k])] = static_cast<int>(k);
  }
  return inv;
}

Matrix distance_matrix(const Matrix& coords) {
  if (coords.cols() != 2 || coords.rows() < 1) {
    throw InvalidInput("coordinates must be an n x 2 matrix with n >= 1");
  }
  if (!coords.allFinite()) {
    throw InvalidInput("non-finite coordinate");
  }
  const Eigen::Index n = coords.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = k + 1; l < n; ++l) {
      const double dx = coords(k, 0) - coords(l, 0);
      const double dy = coords(k, 1) - coords(l, 1);
      d(k, l) = d(l, k) = std::sqrt(dx * dx + dy * dy);
    }
  }
  return d;
}

QapInstance::QapInstance(Matrix coords, Matrix flows)
    : coords_(std::move(coords)), flows_(std::move(flows)) {
  const Eigen::Index n = coords_.rows();
  if (n < 1) throw InvalidInput("instance must have n >= 1");
  if (flows_.rows() != n || flows_.cols() != n) {
    throw InvalidInput("flow matrix must be " + std::to_string(n) + " x " + std::to_string(n));
  }
  if (!flows_.allFinite()) throw InvalidInput("non-finite flow");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (flows_(i, i) != 0.0) throw InvalidInput("flow matrix diagonal must be zero");
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (flows_(i, j) != flows_(j, i)) throw InvalidInput("flow matrix must be symmetric");
      if (flows_(i, j) < 0.0) throw InvalidInput("flows must be nonnegative");
    }
  }
  distances_ = distance_matrix(coords_);
}

double objective(const QapInstance& instance, const Assignment& assignment) {
  const int n = instance.n();
  if (assignment.size() != n) {
    throw InvalidInput("assignment size " + std::to_string(assignment.size()) +
                       " does not match instance size " + std::to_string(n));
  }
  const Matrix& f = instance.flows();
  const Matrix& d = instance.distances();
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    const int fk = assignment[k];
    for (int l = 0; l < n; ++l) {
      total += f(fk, assignment[l]) * d(k, l);
    }
  }
  return total;
}

double objective_matrix_form(const QapInstance& instance, const Assignment& assignment) {
  const int n = instance.n();
  if (assignment.size() != n) throw InvalidInput("assignment size mismatch");
  Matrix x = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k) x(assignment[k], k) = 1.0;
  const Matrix xdxt = x * instance.distances() * x.transpose();
  return instance.flows().cwiseProduct(xdxt).sum();
}

QapInstance generate_instance(SplitMix64& rng, int n) {
  if (n < 2) throw InvalidInput("generate_instance requires n >= 2");
  Matrix coords(n, 2);
  for (int i = 0; i < n; ++i) {
    coords(i, 0) = rng.uniform();
    coords(i, 1) = rng.uniform();
  }
  Matrix raw(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) raw(i, j) = rng.uniform();
  }
  Matrix flows = raw + raw.transpose();
  flows.diagonal().setZero();
  return QapInstance(std::move(coords), std::move(flows));
}

}  // namespace qapforge
