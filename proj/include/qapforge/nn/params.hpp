// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qapforge/rng.hpp"

namespace qapforge::nn {

using Matrix = Eigen::MatrixXd;

/// Named parameters in insertion order. Optimizer state and checkpoints
/// index parameters by position, so the order is part of the model format.
class ParameterStore {
 public:
  int add(std::string name, Matrix value, bool trainable = true);

  int size() const noexcept { return static_cast<int>(values_.size()); }
  int index(std::string_view name) const;
  bool contains(std::string_view name) const;

  const std::string& name(int i) const { return names_[static_cast<std::size_t>(i)]; }
  Matrix& value(int i) { return values_[static_cast<std::size_t>(i)]; }
  const Matrix& value(int i) const { return values_[static_cast<std::size_t>(i)]; }
  Matrix& value(std::string_view name) { return value(index(name)); }
  const Matrix& value(std::string_view name) const { return value(index(name)); }
  bool trainable(int i) const { return trainable_[static_cast<std::size_t>(i)] != 0; }

  std::size_t scalar_count() const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
  std::vector<char> trainable_;
  std::unordered_map<std::string, int> index_;
};

/// Gradients aligned with a ParameterStore by position.
struct GradientSet {
  std::vector<Matrix> grads;

  static GradientSet zeros_like(const ParameterStore& store);
  /// this += other, element by element.
  void accumulate(const GradientSet& other);
  void scale(double s);
};

/// Uniform on [-a, a], a = sqrt(6 / (fan_in + fan_out)). A (rows, cols)
/// weight maps cols inputs to rows outputs; a 1-d shape (rows, 1) is a
/// vector of length rows read as fan_in = rows, fan_out = 1.
Matrix xavier_init(SplitMix64& rng, int rows, int cols);
double xavier_bound(int rows, int cols);

}  // namespace qapforge::nn
