// SPDX-License-Identifier: Apache-2.0
#include "qapforge/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "qapforge/baselines.hpp"
#include "qapforge/errors.hpp"
#include "qapforge/kernels.hpp"

namespace qapforge {

using nn::Matrix;
using nn::Var;

void TrainConfig::validate() const {
  if (n < 2) throw InvalidInput("n must be >= 2");
  if (epochs < 1) throw InvalidInput("epochs must be >= 1");
  if (batch_size < 1) throw InvalidInput("batch_size must be >= 1");
  if (alpha < 0.0) throw InvalidInput("alpha must be >= 0");
  if (beta < 0.0) throw InvalidInput("beta must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidInput("gamma must be in (0, 1]");
  if (!(lr > 0.0)) throw InvalidInput("lr must be positive");
  policy_config().validate();
}

PolicyConfig TrainConfig::policy_config() const {
  PolicyConfig p;
  p.n = n;
  p.d_k = d_k;
  p.d_i = d_i;
  p.dropout = dropout;
  p.head = head;
  p.gru_sharing = gru_sharing;
  return p;
}

nn::AdamConfig TrainConfig::adam_config() const {
  nn::AdamConfig a;
  a.lr = lr;
  return a;
}

KeyValues TrainConfig::to_key_values() const {
  KeyValues kv;
  kv["n"] = std::to_string(n);
  kv["epochs"] = std::to_string(epochs);
  kv["batch_size"] = std::to_string(batch_size);
  kv["dropout"] = format_real(dropout);
  kv["gamma"] = format_real(gamma);
  kv["alpha"] = format_real(alpha);
  kv["beta"] = format_real(beta);
  kv["lr"] = format_real(lr);
  kv["seed"] = std::to_string(seed);
  kv["d_k"] = std::to_string(d_k);
  kv["d_i"] = std::to_string(d_i);
  kv["head"] = to_string(head);
  kv["gru_sharing"] = to_string(gru_sharing);
  kv["train"] = train_path;
  kv["validation"] = validation_path;
  kv["out_dir"] = out_dir;
  kv["resume"] = resume;
  kv["threads"] = std::to_string(threads);
  return kv;
}

namespace {

template <class T>
T to_number(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    T v;
    if constexpr (std::is_same_v<T, double>) {
      v = std::stod(s, &used);
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      v = std::stoull(s, &used);
    } else {
      v = static_cast<T>(std::stoll(s, &used));
    }
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidInput("config key '" + key + "': bad value '" + s + "'");
  }
}

}  // namespace

TrainConfig TrainConfig::from_key_values(const KeyValues& kv) {
  TrainConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "n") c.n = to_number<int>(k, v);
    else if (k == "epochs") c.epochs = to_number<int>(k, v);
    else if (k == "batch_size") c.batch_size = to_number<int>(k, v);
    else if (k == "dropout") c.dropout = to_number<double>(k, v);
    else if (k == "gamma") c.gamma = to_number<double>(k, v);
    else if (k == "alpha") c.alpha = to_number<double>(k, v);
    else if (k == "beta") c.beta = to_number<double>(k, v);
    else if (k == "lr") c.lr = to_number<double>(k, v);
    else if (k == "seed") c.seed = to_number<std::uint64_t>(k, v);
    else if (k == "d_k") c.d_k = to_number<int>(k, v);
    else if (k == "d_i") c.d_i = to_number<int>(k, v);
    else if (k == "head") c.head = parse_pointer_head(v);
    else if (k == "gru_sharing") c.gru_sharing = parse_gru_sharing(v);
    else if (k == "train") c.train_path = v;
    else if (k == "validation") c.validation_path = v;
    else if (k == "out_dir") c.out_dir = v;
    else if (k == "resume") c.resume = v;
    else if (k == "threads") c.threads = to_number<int>(k, v);
    else throw InvalidInput("unknown config key '" + k + "'");
  }
  c.validate();
  return c;
}

std::vector<double> advantages(std::span<const double> costs, std::span<const double> values,
                               double gamma) {
  if (costs.size() != values.size()) throw InvalidInput("costs/values length mismatch");
  std::vector<double> a(costs.size());
  for (std::size_t t = 0; t < costs.size(); ++t) {
    const double next = t + 1 < values.size() ? values[t + 1] : 0.0;
    a[t] = -costs[t] + gamma * next - values[t];
  }
  return a;
}

EpisodeLoss a2c_episode_loss(const EpisodeTrace& trace, Var values, const LossWeights& w) {
  const auto steps = static_cast<int>(trace.steps.size());
  if (values.rows() != 1 || values.cols() != steps) {
    throw ShapeError("values must be 1 x " + std::to_string(steps));
  }
  if (static_cast<int>(trace.log_prob_vars.size()) != steps) {
    throw ConsistencyError("trace carries no tape handles");
  }
  nn::Tape& tape = values.tape();

  // A = -r + gamma * V shifted left (V(s_2n) = 0) - V
  Matrix shift = Matrix::Zero(steps, steps);
  for (int t = 0; t + 1 < steps; ++t) shift(t + 1, t) = 1.0;
  Matrix neg_cost(1, steps);
  for (int t = 0; t < steps; ++t) neg_cost(0, t) = -trace.steps[static_cast<std::size_t>(t)].cost;
  Var next_values = nn::scale(nn::matmul(values, tape.constant(std::move(shift))), w.gamma);
  Var adv = nn::add(nn::sub(next_values, values), tape.constant(std::move(neg_cost)));

  EpisodeLoss out;
  out.advantages.assign(adv.value().data(), adv.value().data() + steps);

  Var policy_term;
  Var entropy_sum;
  for (int t = 0; t < steps; ++t) {
    const auto ut = static_cast<std::size_t>(t);
    Var term = nn::scale(trace.log_prob_vars[ut], -out.advantages[ut]);
    policy_term = t == 0 ? term : nn::add(policy_term, term);
    entropy_sum = t == 0 ? trace.entropy_vars[ut] : nn::add(entropy_sum, trace.entropy_vars[ut]);
  }
  Var critic_term = nn::sum(nn::square(adv));
  out.policy_term = policy_term.scalar();
  out.critic_term = critic_term.scalar();
  out.entropy_term = entropy_sum.scalar();
  out.loss = nn::sub(nn::add(policy_term, nn::scale(critic_term, w.alpha)),
                     nn::scale(entropy_sum, w.beta));
  const double total = out.loss.scalar();
  if (!std::isfinite(total)) {
    throw NumericalError("non-finite A2C loss (policy " + std::to_string(out.policy_term) +
                         ", critic " + std::to_string(out.critic_term) + ", entropy " +
                         std::to_string(out.entropy_term) + ")");
  }
  return out;
}

EpisodeLoss rollout_loss(nn::Tape& tape, const PolicyModel& policy, const CriticModel& critic,
                         const QapInstance& instance, SplitMix64& rng, const LossWeights& w,
                         bool training) {
  EpisodeTrace trace =
      decode_episode(policy, instance, DecodeMode::kSample, &rng, training, &tape);
  std::vector<int> sequence;
  sequence.reserve(trace.steps.size());
  for (const auto& s : trace.steps) sequence.push_back(s.action);
  const int steps = static_cast<int>(trace.steps.size());
  Var encoded = tape.constant(encode_prefixes(instance, sequence, steps));
  Var values = critic_forward(tape, critic, encoded);
  return a2c_episode_loss(trace, values, w);
}

std::string format_metrics(const EpochMetrics& m) {
  return "epoch=" + std::to_string(m.epoch) + " loss=" + format_real(m.loss) +
         " val_gap=" + format_real(m.val_gap) + " seconds=" + format_real(m.seconds);
}

Checkpoint initial_checkpoint(const TrainConfig& config) {
  config.validate();
  PolicyModel policy(config.policy_config(), derive_seed(config.seed, {0x706f6c}));
  CriticModel critic(config.n, derive_seed(config.seed, {0x637269}));
  auto popt = nn::AdamState::zeros_like(policy.params());
  auto copt = nn::AdamState::zeros_like(critic.params());
  return Checkpoint{config, std::move(policy), std::move(critic), std::move(popt), std::move(copt),
                    -1, std::numeric_limits<double>::infinity()};
}

TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& validation,
                  std::optional<Checkpoint> start, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.header.n != config.n || validation.header.n != config.n) {
    throw CompatibilityError("dataset size does not match config n = " + std::to_string(config.n));
  }
  Checkpoint current = start ? std::move(*start) : initial_checkpoint(config);
  if (current.policy.config().n != config.n) {
    throw CompatibilityError("resume checkpoint was trained for a different n");
  }
  current.config = config;
  const Execution exec = config.threads == 1 ? Execution::kSerial : Execution::kParallel;
  const LossWeights weights{config.gamma, config.alpha, config.beta};
  const nn::AdamConfig adam = config.adam_config();

  // Swap costs of the validation set are fixed; compute them once.
  const std::vector<double> val_baseline = swap_costs(validation.instances, exec);

  TrainResult result{current, {}, false, {}};
  const bool resumed = current.epoch >= 0;
  if (!resumed) result.best.val_gap = std::numeric_limits<double>::infinity();

  const int first_epoch = current.epoch + 1;
  const int count = static_cast<int>(train_set.instances.size());
  for (int epoch = first_epoch; epoch < first_epoch + config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<int> order(static_cast<std::size_t>(count));
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 shuffle_rng(derive_seed(config.seed, {0x73687566, static_cast<std::uint64_t>(epoch)}));
    shuffle(order, shuffle_rng);

    double loss_sum = 0.0;
    int batches = 0;
    try {
      for (int b0 = 0; b0 < count; b0 += config.batch_size) {
        const int b1 = std::min(count, b0 + config.batch_size);
        std::vector<const QapInstance*> batch;
        std::vector<std::uint64_t> seeds;
        for (int i = b0; i < b1; ++i) {
          batch.push_back(&train_set.instances[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
          seeds.push_back(derive_seed(config.seed, {static_cast<std::uint64_t>(epoch),
                                                    static_cast<std::uint64_t>(b0),
                                                    static_cast<std::uint64_t>(i - b0)}));
        }
        BatchGradients g = batch_gradients(current.policy, current.critic, batch, seeds, weights, exec);
        nn::adam_step(current.policy.params(), g.policy, current.policy_opt, adam);
        nn::adam_step(current.critic.params(), g.critic, current.critic_opt, adam);
        loss_sum += g.loss;
        ++batches;
      }
    } catch (const NumericalError& e) {
      result.aborted = true;
      result.abort_reason = "epoch " + std::to_string(epoch) + ": " + e.what();
      break;
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.loss = loss_sum / std::max(1, batches);
    m.val_gap = mean_greedy_gap(current.policy, validation.instances, val_baseline, exec);
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    current.epoch = epoch;
    current.val_gap = m.val_gap;
    result.metrics.push_back(m);
    if (m.val_gap < result.best.val_gap || result.best.epoch < 0) result.best = current;
    if (on_epoch) on_epoch(m, current);
  }
  return result;
}

}  // namespace qapforge
