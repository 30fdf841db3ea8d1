// SPDX-License-Identifier: Apache-2.0
#include "qapforge/nn/params.hpp"

#include <cmath>

#include "qapforge/errors.hpp"

namespace qapforge::nn {

int ParameterStore::add(std::string name, Matrix value, bool trainable) {
  if (index_.count(name)) throw InvalidInput("duplicate parameter name '" + name + "'");
  const int id = size();
  index_.emplace(name, id);
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  trainable_.push_back(trainable ? 1 : 0);
  return id;
}

int ParameterStore::index(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw InvalidInput("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

bool ParameterStore::contains(std::string_view name) const {
  return index_.count(std::string(name)) != 0;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t total = 0;
  for (const auto& v : values_) total += static_cast<std::size_t>(v.size());
  return total;
}

GradientSet GradientSet::zeros_like(const ParameterStore& store) {
  GradientSet g;
  g.grads.reserve(static_cast<std::size_t>(store.size()));
  for (int i = 0; i < store.size(); ++i) {
    g.grads.push_back(Matrix::Zero(store.value(i).rows(), store.value(i).cols()));
  }
  return g;
}

void GradientSet::accumulate(const GradientSet& other) {
  if (other.grads.size() != grads.size()) throw ConsistencyError("gradient set size mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += other.grads[i];
}

void GradientSet::scale(double s) {
  for (auto& g : grads) g *= s;
}

double xavier_bound(int rows, int cols) {
  const int fan_in = cols == 1 ? rows : cols;
  const int fan_out = cols == 1 ? 1 : rows;
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Matrix xavier_init(SplitMix64& rng, int rows, int cols) {
  const double a = xavier_bound(rows, cols);
  Matrix m(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-a, a);
  }
  return m;
}

}  // namespace qapforge::nn
