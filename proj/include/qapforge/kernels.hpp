// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "qapforge/critic.hpp"
#include "qapforge/instance.hpp"
#include "qapforge/nn/params.hpp"
#include "qapforge/policy.hpp"
#include "qapforge/trainer.hpp"

namespace qapforge {

/// Every batch kernel has a serial reference path. The OpenMP path
/// distributes independent instances over threads and reduces in instance
/// order, so both paths return bit-identical results.
enum class Execution { kSerial, kParallel };

/// Threads for the OpenMP paths: `requested` if positive, else
/// QAPFORGE_THREADS, else the OpenMP default. Applies the value and returns it.
int configure_threads(std::optional<int> requested);

struct BatchGradients {
  double loss = 0.0;
  nn::GradientSet policy;
  nn::GradientSet critic;
};

/// Mean A2C loss over the batch and its gradients. Instance `i` samples its
/// rollout (and dropout masks) from SplitMix64(seeds[i]).
BatchGradients batch_gradients(const PolicyModel& policy, const CriticModel& critic,
                               std::span<const QapInstance* const> batch,
                               std::span<const std::uint64_t> seeds, const LossWeights& weights,
                               Execution exec);

struct Solution {
  Assignment assignment;
  double cost = 0.0;
  double seconds = 0.0;
};

using Solver = std::function<Solution(const QapInstance&)>;

/// Applies `solver` to every instance; wall time is measured around each
/// call only.
std::vector<Solution> solve_all(std::span<const QapInstance> instances, const Solver& solver,
                                Execution exec);

std::vector<double> swap_costs(std::span<const QapInstance> instances, Execution exec);

/// Mean percentage gap of greedy decoding against `baseline` costs.
double mean_greedy_gap(const PolicyModel& policy, std::span<const QapInstance> instances,
                       std::span<const double> baseline, Execution exec);

}  // namespace qapforge
