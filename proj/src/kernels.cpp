// SPDX-License-Identifier: Apache-2.0
#include "qapforge/kernels.hpp"

#include <chrono>
#include <cstdlib>
#include <omp.h>

#include "qapforge/baselines.hpp"
#include "qapforge/errors.hpp"
#include "qapforge/inference.hpp"

namespace qapforge {

int configure_threads(std::optional<int> requested) {
  int threads = 0;
  if (requested && *requested > 0) {
    threads = *requested;
  } else if (const char* env = std::getenv("QAPFORGE_THREADS"); env && *env) {
    threads = std::atoi(env);
    if (threads < 1) throw InvalidInput("QAPFORGE_THREADS must be a positive integer");
  }
  if (threads > 0) omp_set_num_threads(threads);
  return threads > 0 ? threads : omp_get_max_threads();
}

namespace {

struct SlotResult {
  double loss = 0.0;
  nn::GradientSet policy;
  nn::GradientSet critic;
};

SlotResult run_slot(const PolicyModel& policy, const CriticModel& critic,
                    const QapInstance& instance, std::uint64_t seed, const LossWeights& w) {
  SplitMix64 rng(seed);
  nn::Tape tape;
  EpisodeLoss l = rollout_loss(tape, policy, critic, instance, rng, w);
  tape.backward(l.loss);
  return {l.loss.scalar(), tape.gradients(policy.params()), tape.gradients(critic.params())};
}

}  // namespace

BatchGradients batch_gradients(const PolicyModel& policy, const CriticModel& critic,
                               std::span<const QapInstance* const> batch,
                               std::span<const std::uint64_t> seeds, const LossWeights& weights,
                               Execution exec) {
  if (batch.size() != seeds.size()) throw InvalidInput("one seed per batch instance required");
  if (batch.empty()) throw InvalidInput("empty batch");
  BatchGradients out;
  out.policy = nn::GradientSet::zeros_like(policy.params());
  out.critic = nn::GradientSet::zeros_like(critic.params());
  const auto count = static_cast<std::int64_t>(batch.size());

  if (exec == Execution::kSerial) {
    for (std::int64_t i = 0; i < count; ++i) {
      SlotResult r = run_slot(policy, critic, *batch[static_cast<std::size_t>(i)],
                              seeds[static_cast<std::size_t>(i)], weights);
      out.loss += r.loss;
      out.policy.accumulate(r.policy);
      out.critic.accumulate(r.critic);
    }
  } else {
    // Rollouts run concurrently; the ordered region folds each result in
    // instance order.
    std::exception_ptr failure;
#pragma omp parallel for ordered schedule(static, 1)
    for (std::int64_t i = 0; i < count; ++i) {
      SlotResult r;
      bool ok = true;
      try {
        r = run_slot(policy, critic, *batch[static_cast<std::size_t>(i)],
                     seeds[static_cast<std::size_t>(i)], weights);
      } catch (...) {
        ok = false;
#pragma omp critical(qapforge_batch_failure)
        if (!failure) failure = std::current_exception();
      }
#pragma omp ordered
      if (ok) {
        out.loss += r.loss;
        out.policy.accumulate(r.policy);
        out.critic.accumulate(r.critic);
      }
    }
    if (failure) std::rethrow_exception(failure);
  }
  const double inv = 1.0 / static_cast<double>(count);
  out.loss *= inv;
  out.policy.scale(inv);
  out.critic.scale(inv);
  return out;
}

std::vector<Solution> solve_all(std::span<const QapInstance> instances, const Solver& solver,
                                Execution exec) {
  std::vector<Solution> out(instances.size());
  const auto count = static_cast<std::int64_t>(instances.size());
  auto one = [&](std::int64_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    Solution s = solver(instances[static_cast<std::size_t>(i)]);
    const auto t1 = std::chrono::steady_clock::now();
    s.seconds = std::chrono::duration<double>(t1 - t0).count();
    out[static_cast<std::size_t>(i)] = std::move(s);
  };
  if (exec == Execution::kSerial) {
    for (std::int64_t i = 0; i < count; ++i) one(i);
    return out;
  }
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      one(i);
    } catch (...) {
#pragma omp critical(qapforge_solve_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<double> swap_costs(std::span<const QapInstance> instances, Execution exec) {
  const auto sols = solve_all(
      instances,
      [](const QapInstance& inst) {
        SwapResult r = swap_solve(inst);
        return Solution{std::move(r.assignment), r.cost, 0.0};
      },
      exec);
  std::vector<double> costs;
  costs.reserve(sols.size());
  for (const auto& s : sols) costs.push_back(s.cost);
  return costs;
}

double mean_greedy_gap(const PolicyModel& policy, std::span<const QapInstance> instances,
                       std::span<const double> baseline, Execution exec) {
  if (instances.size() != baseline.size()) throw AlignmentError("baseline size mismatch");
  const auto sols = solve_all(
      instances,
      [&](const QapInstance& inst) {
        auto [a, c] = solve_greedy(policy, inst);
        return Solution{std::move(a), c, 0.0};
      },
      exec);
  double total = 0.0;
  for (std::size_t i = 0; i < sols.size(); ++i) total += percentage_gap(sols[i].cost, baseline[i]);
  return total / static_cast<double>(sols.size());
}

}  // namespace qapforge
