// SPDX-License-Identifier: Apache-2.0
#include "qapforge/policy.hpp"

#include <cmath>

#include "qapforge/errors.hpp"
#include "qapforge/nn/layers.hpp"

namespace qapforge {

using nn::Matrix;
using nn::Tape;
using nn::Var;

void PolicyConfig::validate() const {
  if (n < 1) throw InvalidInput("policy n must be >= 1");
  if (d_k < 1 || d_i < 1) throw InvalidInput("policy widths must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw InvalidInput("dropout must be in [0, 1)");
}

std::string to_string(PointerHead head) {
  return head == PointerHead::kAttention ? "attention" : "mlp";
}

std::string to_string(GruSharing sharing) {
  return sharing == GruSharing::kAcrossChains ? "shared" : "per_chain";
}

PointerHead parse_pointer_head(const std::string& s) {
  if (s == "attention") return PointerHead::kAttention;
  if (s == "mlp") return PointerHead::kMlp;
  throw InvalidInput("unknown pointer head '" + s + "'");
}

GruSharing parse_gru_sharing(const std::string& s) {
  if (s == "shared") return GruSharing::kAcrossChains;
  if (s == "per_chain") return GruSharing::kPerChain;
  throw InvalidInput("unknown gru sharing '" + s + "'");
}

PolicyModel::PolicyModel(const PolicyConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  SplitMix64 rng(seed);
  const int n = config_.n;
  const int dk = config_.d_k;
  const int di = config_.d_i;

  nn::add_linear(params_, "conv0", 2, dk, rng);
  nn::add_linear(params_, "conv1", dk, dk, rng);
  nn::add_linear(params_, "conv2", dk, dk, rng);

  params_.add("gcn0.weight", nn::xavier_init(rng, dk, n));
  params_.add("gcn1.weight", nn::xavier_init(rng, dk, dk));
  params_.add("gcn2.weight", nn::xavier_init(rng, dk, dk));

  if (config_.gru_sharing == GruSharing::kAcrossChains) {
    nn::add_gru(params_, "gru", dk, dk, rng);
  } else {
    nn::add_gru(params_, "gru_upper", dk, dk, rng);
    nn::add_gru(params_, "gru_lower", dk, dk, rng);
  }

  for (const char* side : {"upper", "lower"}) {
    const std::string p(side);
    if (config_.head == PointerHead::kAttention) {
      params_.add(p + ".v_a", nn::xavier_init(rng, di, 1));
      params_.add(p + ".W_a", nn::xavier_init(rng, di, 2 * dk));
      params_.add(p + ".v_o", nn::xavier_init(rng, di, 1));
      params_.add(p + ".W_o", nn::xavier_init(rng, di, 2 * dk));
    } else {
      nn::add_linear(params_, p + ".mlp", dk, n, rng);
    }
  }
  params_.add("start", nn::xavier_init(rng, dk, 1));
}

std::string PolicyModel::upper_gru() const {
  return config_.gru_sharing == GruSharing::kAcrossChains ? "gru" : "gru_upper";
}

std::string PolicyModel::lower_gru() const {
  return config_.gru_sharing == GruSharing::kAcrossChains ? "gru" : "gru_lower";
}

Matrix normalized_adjacency(const Matrix& flows) {
  const Eigen::Index n = flows.rows();
  Matrix a = flows + Matrix::Identity(n, n);
  const Eigen::VectorXd inv_sqrt = a.rowwise().sum().array().rsqrt();
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

Var embed_locations(Tape& tape, const PolicyModel& model, const Matrix& coords) {
  if (coords.cols() != 2 || coords.rows() < 1) {
    throw ShapeError("embed_locations expects an n x 2 coordinate matrix");
  }
  Var x = tape.constant(coords.transpose());
  for (int l = 0; l < PolicyConfig::kConvLayers; ++l) {
    const auto layer = nn::bind_linear(tape, model.params(), "conv" + std::to_string(l));
    x = nn::pointwise_conv(layer, x);
    if (l + 1 < PolicyConfig::kConvLayers) x = nn::relu(x);
  }
  return x;
}

Var embed_facilities(Tape& tape, const PolicyModel& model, const Matrix& flows) {
  const Eigen::Index n = flows.rows();
  if (flows.cols() != n || n != model.config().n) {
    throw ShapeError("embed_facilities expects an n x n flow matrix with n = " +
                     std::to_string(model.config().n));
  }
  if (flows != flows.transpose()) {
    throw InvalidInput("embed_facilities requires a symmetric flow matrix");
  }
  Var adj = tape.constant(normalized_adjacency(flows));
  Var g = tape.constant(flows);
  for (int l = 0; l < PolicyConfig::kGcnLayers; ++l) {
    Var w = tape.parameter(model.params(), "gcn" + std::to_string(l) + ".weight");
    g = nn::matmul(nn::matmul(w, g), adj);
    if (l + 1 < PolicyConfig::kGcnLayers) g = nn::relu(g);
  }
  return g;
}

AttentionVars bind_attention(Tape& tape, const PolicyModel& model, const std::string& prefix) {
  const auto& p = model.params();
  return {tape.parameter(p, prefix + ".v_a"), tape.parameter(p, prefix + ".W_a"),
          tape.parameter(p, prefix + ".v_o"), tape.parameter(p, prefix + ".W_o")};
}

Var attention_logits(const AttentionVars& attn, Var embeddings, Var query) {
  const int n = static_cast<int>(embeddings.cols());
  if (query.cols() != 1 || query.rows() != embeddings.rows()) {
    throw ShapeError("attention query must be a d_k column matching the embeddings");
  }
  // v^T (W X) evaluated as (v^T W) X: same value, one vector-matrix product
  // instead of a d_i x n intermediate.
  Var extended = nn::concat_rows(embeddings, nn::repeat_cols(query, n));
  Var score_a = nn::matmul(nn::matmul(nn::transpose(attn.v_a), attn.w_a), extended);
  Var weights = nn::softmax(score_a);
  Var context = nn::matmul(embeddings, nn::transpose(weights));
  Var with_context = nn::concat_rows(embeddings, nn::repeat_cols(context, n));
  return nn::matmul(nn::matmul(nn::transpose(attn.v_o), attn.w_o), with_context);
}

Var attention_probs(const AttentionVars& attn, Var embeddings, Var query,
                    std::span<const char> mask) {
  return nn::masked_softmax(attention_logits(attn, embeddings, query), mask);
}

PointerDecoder::PointerDecoder(const PolicyModel& model, const QapInstance& instance, Tape& tape,
                               bool training, SplitMix64* rng)
    : model_(model), tape_(tape), training_(training), rng_(rng) {
  const PolicyConfig& cfg = model.config();
  if (instance.n() != cfg.n) {
    throw CompatibilityError("model built for n = " + std::to_string(cfg.n) +
                             ", instance has n = " + std::to_string(instance.n()));
  }
  if (training_ && cfg.dropout > 0.0 && rng_ == nullptr) {
    throw InvalidInput("training-mode decoding needs a generator for dropout");
  }
  locations_ = embed_locations(tape, model, instance.coords());
  facilities_ = embed_facilities(tape, model, instance.flows());
  if (training_) {
    locations_ = nn::dropout(locations_, cfg.dropout, *rng_);
    facilities_ = nn::dropout(facilities_, cfg.dropout, *rng_);
  }
  start_ = tape.parameter(model.params(), "start");
  zero_hidden_ = tape.constant(Matrix::Zero(cfg.d_k, 1));
  gru_upper_ = nn::bind_gru(tape, model.params(), model.upper_gru());
  gru_lower_ = nn::bind_gru(tape, model.params(), model.lower_gru());
  if (cfg.head == PointerHead::kAttention) {
    attn_upper_ = bind_attention(tape, model, "upper");
    attn_lower_ = bind_attention(tape, model, "lower");
  } else {
    mlp_upper_ = nn::bind_linear(tape, model.params(), "upper.mlp");
    mlp_lower_ = nn::bind_linear(tape, model.params(), "lower.mlp");
  }
}

Var PointerDecoder::location_embedding(int location) { return nn::column(locations_, location); }

Var PointerDecoder::facility_embedding(int facility) { return nn::column(facilities_, facility); }

PointerDecoder::Block PointerDecoder::block(const nn::GruVars& gru, const AttentionVars& attn,
                                            const nn::LinearVars& mlp, Var embeddings,
                                            Var hidden, Var input) {
  Var next = nn::gru_cell(gru, input, hidden);
  Var query = next;
  if (training_) query = nn::dropout(query, model_.config().dropout, *rng_);
  Var logits = model_.config().head == PointerHead::kAttention
                   ? attention_logits(attn, embeddings, query)
                   : nn::transpose(nn::linear(mlp, query));
  return {next, logits};
}

PointerDecoder::Block PointerDecoder::upper(Var hidden, Var input) {
  return block(gru_upper_, attn_upper_, mlp_upper_, locations_, hidden, input);
}

PointerDecoder::Block PointerDecoder::lower(Var hidden, Var input) {
  return block(gru_lower_, attn_lower_, mlp_lower_, facilities_, hidden, input);
}

double EpisodeTrace::total_log_prob() const {
  double s = 0.0;
  for (const auto& st : steps) s += st.log_prob;
  return s;
}

int greedy_action(std::span<const double> probs, std::span<const char> mask) {
  int best = -1;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (!mask[k]) continue;
    if (best < 0 || probs[k] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  }
  if (best < 0) throw DegenerateMaskError("no allowed action");
  return best;
}

int sample_action(std::span<const double> probs, std::span<const char> mask, SplitMix64& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  int last = -1;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (!mask[k]) continue;
    cumulative += probs[k];
    last = static_cast<int>(k);
    if (u < cumulative) return last;
  }
  if (last < 0) throw DegenerateMaskError("no allowed action");
  return last;
}

EpisodeTrace decode_episode(const PolicyModel& model, const QapInstance& instance,
                            DecodeMode mode, SplitMix64* rng, bool training, Tape* tape) {
  if (mode == DecodeMode::kSample && rng == nullptr) {
    throw InvalidInput("sampling requires a generator");
  }
  std::optional<Tape> local;
  if (tape == nullptr) tape = &local.emplace(false);
  PointerDecoder dec(model, instance, *tape, training, rng);

  // Non-owning handle: the state never outlives this call.
  MdpState state(std::shared_ptr<const QapInstance>(std::shared_ptr<void>(), &instance));
  EpisodeTrace trace;
  const int n = instance.n();
  trace.steps.reserve(static_cast<std::size_t>(2 * n));

  Var h_upper = dec.zero_hidden();
  Var h_lower = dec.zero_hidden();
  Var upper_input = dec.start_token();
  for (int t = 0; t < 2 * n; ++t) {
    const ActionMask mask = legal_actions(state);
    PointerDecoder::Block b;
    if (mask.role == Role::kLocation) {
      b = dec.upper(h_upper, upper_input);
      h_upper = b.hidden;
    } else {
      b = dec.lower(h_lower, dec.location_embedding(state.sequence().back()));
      h_lower = b.hidden;
    }
    Var logp = nn::masked_log_softmax(b.logits, mask.allowed);
    Var entropy = nn::masked_entropy(b.logits, mask.allowed);
    const Matrix probs_m = nn::masked_softmax_value(b.logits.value(), mask.allowed);
    TraceStep st;
    st.role = mask.role;
    st.probs.assign(probs_m.data(), probs_m.data() + probs_m.size());
    st.action = mode == DecodeMode::kGreedy ? greedy_action(st.probs, mask.allowed)
                                            : sample_action(st.probs, mask.allowed, *rng);
    Var chosen = nn::element(logp, 0, st.action);
    st.log_prob = chosen.scalar();
    st.entropy = entropy.scalar();
    trace.log_prob_vars.push_back(chosen);
    trace.entropy_vars.push_back(entropy);
    auto [next, cost] = step(state, st.action);
    st.cost = cost;
    trace.total_cost += cost;
    if (mask.role == Role::kFacility) upper_input = dec.facility_embedding(st.action);
    state = std::move(next);
    trace.steps.push_back(std::move(st));
  }
  trace.assignment = assignment_of(state);
  if (local) {
    trace.log_prob_vars.clear();
    trace.entropy_vars.clear();
  }
  return trace;
}

}  // namespace qapforge
