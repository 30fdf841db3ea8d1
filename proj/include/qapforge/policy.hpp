// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qapforge/instance.hpp"
#include "qapforge/mdp.hpp"
#include "qapforge/nn/layers.hpp"
#include "qapforge/nn/tape.hpp"

namespace qapforge {

/// Decoder head that turns a GRU output into action logits.
enum class PointerHead {
  /// Three-step attention over the candidate embeddings.
  kAttention,
  /// One linear layer d_k -> n (the attention ablation).
  kMlp,
};

enum class GruSharing {
  /// One GRU parameter set driving both the upper and lower hidden streams.
  kAcrossChains,
  /// Separate GRU parameters for the upper and the lower chain.
  kPerChain,
};

struct PolicyConfig {
  static constexpr int kConvLayers = 3;
  static constexpr int kGcnLayers = 3;

  int n = 10;
  int d_k = 128;
  int d_i = 128;
  double dropout = 0.1;
  PointerHead head = PointerHead::kAttention;
  GruSharing gru_sharing = GruSharing::kAcrossChains;

  void validate() const;
  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

std::string to_string(PointerHead head);
std::string to_string(GruSharing sharing);
PointerHead parse_pointer_head(const std::string& s);
GruSharing parse_gru_sharing(const std::string& s);

/// Double pointer network parameters. Parameter order (and so checkpoint
/// layout) is fixed by the constructor.
class PolicyModel {
 public:
  PolicyModel(const PolicyConfig& config, std::uint64_t seed);

  const PolicyConfig& config() const noexcept { return config_; }
  nn::ParameterStore& params() noexcept { return params_; }
  const nn::ParameterStore& params() const noexcept { return params_; }

  std::string upper_gru() const;
  std::string lower_gru() const;

 private:
  PolicyConfig config_;
  nn::ParameterStore params_;
};

/// Normalized adjacency S^{-1/2} (F + I) S^{-1/2}, S = diag(row sums of F + I).
nn::Matrix normalized_adjacency(const nn::Matrix& flows);

/// Three pointwise conv layers 2 -> d_k -> d_k -> d_k with ReLU between them.
/// Input is the n x 2 coordinate matrix; output is d_k x n.
nn::Var embed_locations(nn::Tape& tape, const PolicyModel& model, const nn::Matrix& coords);

/// Three GCN layers G <- W G A_hat starting from G_0 = F (node features are
/// flow rows), ReLU after the first two. Output d_k x n. Throws InvalidInput
/// for an asymmetric flow matrix.
nn::Var embed_facilities(nn::Tape& tape, const PolicyModel& model, const nn::Matrix& flows);

/// Parameters of one attention head, bound to a tape.
struct AttentionVars {
  nn::Var v_a, w_a, v_o, w_o;
};
AttentionVars bind_attention(nn::Tape& tape, const PolicyModel& model, const std::string& prefix);

/// Output logits (1 x n) of the three-step attention, before masking:
///   a = softmax(v_a^T W_a [E; q 1^T]),  c = E a,  logits = v_o^T W_o [E; c 1^T].
nn::Var attention_logits(const AttentionVars& attn, nn::Var embeddings, nn::Var query);

/// masked_softmax(attention_logits(...)).
nn::Var attention_probs(const AttentionVars& attn, nn::Var embeddings, nn::Var query,
                        std::span<const char> mask);

/// Per-instance decoding context: embeddings and bound parameters on one
/// tape. Greedy, sampling and beam search all step through this object.
class PointerDecoder {
 public:
  /// `rng` is used for dropout only and may be null when `training` is false.
  PointerDecoder(const PolicyModel& model, const QapInstance& instance, nn::Tape& tape,
                 bool training, SplitMix64* rng);

  struct Block {
    nn::Var hidden;
    nn::Var logits;
  };

  nn::Var start_token() const { return start_; }
  nn::Var zero_hidden() const { return zero_hidden_; }
  nn::Var location_embedding(int location);
  nn::Var facility_embedding(int facility);
  nn::Var location_embeddings() const { return locations_; }
  nn::Var facility_embeddings() const { return facilities_; }

  /// U block: GRU step on the upper stream, pointer over locations.
  Block upper(nn::Var hidden, nn::Var input);
  /// L block: GRU step on the lower stream, pointer over facilities.
  Block lower(nn::Var hidden, nn::Var input);

  nn::Tape& tape() { return tape_; }

 private:
  Block block(const nn::GruVars& gru, const AttentionVars& attn, const nn::LinearVars& mlp,
              nn::Var embeddings, nn::Var hidden, nn::Var input);

  const PolicyModel& model_;
  nn::Tape& tape_;
  bool training_;
  SplitMix64* rng_;
  nn::Var locations_;
  nn::Var facilities_;
  nn::Var start_;
  nn::Var zero_hidden_;
  nn::GruVars gru_upper_;
  nn::GruVars gru_lower_;
  AttentionVars attn_upper_;
  AttentionVars attn_lower_;
  nn::LinearVars mlp_upper_;
  nn::LinearVars mlp_lower_;
};

enum class DecodeMode { kSample, kGreedy };

struct TraceStep {
  Role role = Role::kLocation;
  int action = -1;
  std::vector<double> probs;
  double log_prob = 0.0;
  double entropy = 0.0;
  double cost = 0.0;
};

struct EpisodeTrace {
  std::vector<TraceStep> steps;
  Assignment assignment;
  double total_cost = 0.0;
  /// Tape handles of the per-step chosen log-probabilities and entropies.
  /// Empty when decode_episode ran on its private tape.
  std::vector<nn::Var> log_prob_vars;
  std::vector<nn::Var> entropy_vars;

  double total_log_prob() const;
};

/// Index of the largest allowed probability, lowest index on ties.
int greedy_action(std::span<const double> probs, std::span<const char> mask);
/// Inverse-CDF draw over the allowed entries.
int sample_action(std::span<const double> probs, std::span<const char> mask, SplitMix64& rng);

/// Runs the 2n alternating U/L blocks. With `tape == nullptr` a private
/// non-recording tape is used. `rng` drives sampling and dropout; it may be
/// null for greedy decoding without training.
EpisodeTrace decode_episode(const PolicyModel& model, const QapInstance& instance,
                            DecodeMode mode, SplitMix64* rng, bool training,
                            nn::Tape* tape = nullptr);

}  // namespace qapforge
