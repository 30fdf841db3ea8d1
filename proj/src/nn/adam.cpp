// SPDX-License-Identifier: Apache-2.0
#include "qapforge/nn/adam.hpp"

#include <cmath>

#include "qapforge/errors.hpp"

namespace qapforge::nn {

AdamState AdamState::zeros_like(const ParameterStore& store) {
  AdamState s;
  for (int i = 0; i < store.size(); ++i) {
    s.m.push_back(Matrix::Zero(store.value(i).rows(), store.value(i).cols()));
    s.v.push_back(Matrix::Zero(store.value(i).rows(), store.value(i).cols()));
  }
  return s;
}

void adam_step(ParameterStore& store, const GradientSet& grads, AdamState& state,
               const AdamConfig& c) {
  const auto count = static_cast<std::size_t>(store.size());
  if (state.m.size() != count || state.v.size() != count) {
    throw ConsistencyError("optimizer state does not match parameter store");
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!store.trainable(static_cast<int>(i))) continue;
    const Matrix& p = store.value(static_cast<int>(i));
    if (i >= grads.grads.size() || grads.grads[i].rows() != p.rows() ||
        grads.grads[i].cols() != p.cols()) {
      throw ConsistencyError("missing or misshaped gradient for '" +
                             store.name(static_cast<int>(i)) + "'");
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < count; ++i) {
    if (!store.trainable(static_cast<int>(i))) continue;
    const Matrix& g = grads.grads[i];
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    Matrix& p = store.value(static_cast<int>(i));
    p.array() -= c.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.eps);
  }
}

}  // namespace qapforge::nn
