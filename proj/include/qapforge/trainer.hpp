// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qapforge/config.hpp"
#include "qapforge/critic.hpp"
#include "qapforge/dataset.hpp"
#include "qapforge/nn/adam.hpp"
#include "qapforge/policy.hpp"

namespace qapforge {

struct TrainConfig {
  int n = 10;
  int epochs = 20;
  int batch_size = 50;
  double dropout = 0.1;
  double gamma = 1.0;
  double alpha = 0.5;
  double beta = 0.01;
  double lr = 1e-4;
  std::uint64_t seed = 42;
  int d_k = 128;
  int d_i = 128;
  PointerHead head = PointerHead::kAttention;
  GruSharing gru_sharing = GruSharing::kAcrossChains;
  std::string train_path;
  std::string validation_path;
  std::string out_dir;
  std::string resume;
  /// 0 = OpenMP default.
  int threads = 1;

  void validate() const;
  PolicyConfig policy_config() const;
  nn::AdamConfig adam_config() const;

  KeyValues to_key_values() const;
  /// Unknown keys are rejected.
  static TrainConfig from_key_values(const KeyValues& kv);
};

struct LossWeights {
  double gamma = 1.0;
  double alpha = 0.5;
  double beta = 0.01;
};

/// A_t = -r_t + gamma V(s_{t+1}) - V(s_t) with V(s_{2n}) = 0. `costs` are the
/// environment's nonnegative incremental costs; `values` holds V(s_0..s_{2n-1}).
std::vector<double> advantages(std::span<const double> costs, std::span<const double> values,
                               double gamma);

struct EpisodeLoss {
  nn::Var loss;
  double policy_term = 0.0;
  double critic_term = 0.0;
  double entropy_term = 0.0;
  std::vector<double> advantages;
};

/// sum_t [-log pi(a_t|s_t) * detach(A_t)] + alpha sum_t A_t^2 - beta sum_t H(o_t)
/// for one episode traced on `values`' tape. `values` is 1 x 2n.
/// Throws NumericalError on a non-finite result.
EpisodeLoss a2c_episode_loss(const EpisodeTrace& trace, nn::Var values, const LossWeights& w);

/// Rolls out one sampled training episode for `instance` on `tape` and
/// returns its loss (unnormalized).
EpisodeLoss rollout_loss(nn::Tape& tape, const PolicyModel& policy, const CriticModel& critic,
                         const QapInstance& instance, SplitMix64& rng, const LossWeights& w,
                         bool training = true);

struct Checkpoint {
  TrainConfig config;
  PolicyModel policy;
  CriticModel critic;
  nn::AdamState policy_opt;
  nn::AdamState critic_opt;
  int epoch = -1;
  double val_gap = 0.0;
};

/// A single file: text manifest (one `param` line per tensor with name,
/// shape and byte offset, plus the config, epoch and metric), a `blob <bytes>`
/// line, then the little-endian float64 blob.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws CorruptionError when the blob and the manifest disagree.
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// load_checkpoint plus a CompatibilityError unless the model size is `n`.
Checkpoint load_checkpoint_for(const std::filesystem::path& path, int n);

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0;
  double val_gap = 0.0;
  double seconds = 0.0;
};

/// `epoch=<int> loss=<real> val_gap=<real> seconds=<real>`
std::string format_metrics(const EpochMetrics& m);

struct TrainResult {
  Checkpoint best;
  std::vector<EpochMetrics> metrics;
  bool aborted = false;
  std::string abort_reason;
};

using EpochCallback = std::function<void(const EpochMetrics&, const Checkpoint& latest)>;

/// Fresh models seeded from config.seed.
Checkpoint initial_checkpoint(const TrainConfig& config);

/// A2C over shuffled batches with one Adam step per batch, greedy
/// validation gap against the swap baseline after every epoch, and the
/// lowest-gap epoch returned. `start` resumes from a checkpoint.
TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& validation,
                  std::optional<Checkpoint> start = std::nullopt,
                  const EpochCallback& on_epoch = {});

}  // namespace qapforge
