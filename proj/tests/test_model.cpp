// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "qapforge/baselines.hpp"
#include "qapforge/critic.hpp"
#include "qapforge/errors.hpp"
#include "qapforge/nn/gradcheck.hpp"
#include "qapforge/policy.hpp"

using namespace qapforge;
using namespace qapforge::testing;
using nn::Matrix;
using nn::Tape;
using nn::Var;

namespace {

PolicyConfig small_config(int n, PointerHead head = PointerHead::kAttention,
                          GruSharing sharing = GruSharing::kAcrossChains) {
  PolicyConfig c;
  c.n = n;
  c.d_k = 8;
  c.d_i = 6;
  c.head = head;
  c.gru_sharing = sharing;
  return c;
}

Matrix permute_columns(const Matrix& m, const std::vector<int>& p) {
  Matrix out(m.rows(), m.cols());
  for (int j = 0; j < static_cast<int>(p.size()); ++j) out.col(p[static_cast<std::size_t>(j)]) = m.col(j);
  return out;
}

}  // namespace

TEST_CASE("normalized adjacency") {
  CHECK(normalized_adjacency(Matrix::Zero(4, 4)) == Matrix::Identity(4, 4));
  Matrix f(2, 2);
  f << 0, 3, 3, 0;
  const Matrix a = normalized_adjacency(f);
  CHECK(a(0, 1) == doctest::Approx(0.75));
  CHECK(a(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("location embedding shape, equivariance, duplicates") {
  SplitMix64 rng(1);
  const PolicyModel model(small_config(6), 11);
  Tape tape(false);
  Matrix coords(6, 2);
  for (Eigen::Index k = 0; k < coords.size(); ++k) coords(k) = rng.uniform();
  coords.row(4) = coords.row(1);
  const Matrix e = embed_locations(tape, model, coords).value();
  CHECK(e.rows() == 8);
  CHECK(e.cols() == 6);
  CHECK(e.col(4) == e.col(1));

  const std::vector<int> p{2, 0, 5, 1, 3, 4};  // row k moves to p[k]
  Matrix moved(6, 2);
  for (int k = 0; k < 6; ++k) moved.row(p[static_cast<std::size_t>(k)]) = coords.row(k);
  CHECK((embed_locations(tape, model, moved).value() - permute_columns(e, p)).cwiseAbs().maxCoeff() < 1e-12);

  // Another n uses the same convolution weights.
  const Matrix three = embed_locations(tape, model, coords.topRows(3)).value();
  CHECK(three.cols() == 3);
}

TEST_CASE("facility embedding") {
  SplitMix64 rng(2);
  const PolicyModel model(small_config(5), 12);
  const QapInstance inst = generate_instance(rng, 5);
  Tape tape(false);
  const Matrix g = embed_facilities(tape, model, inst.flows()).value();
  CHECK(g.rows() == 8);
  CHECK(g.cols() == 5);

  // Relabeling facilities by P permutes rows and columns of F. Node features
  // are flow rows, so the first layer's input columns follow the relabeling
  // too: W G_0 P^T only matches when W's columns are permuted alongside.
  // The first-layer weights are therefore permuted as well.
  const std::vector<int> p{3, 0, 4, 1, 2};
  Matrix f2(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) f2(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]) = inst.flow(i, j);
  PolicyModel moved = model;
  Matrix& w0 = moved.params().value("gcn0.weight");
  w0 = permute_columns(model.params().value("gcn0.weight"), p);
  const Matrix g2 = embed_facilities(tape, moved, f2).value();
  CHECK((g2 - permute_columns(g, p)).cwiseAbs().maxCoeff() < 1e-12);

  const Matrix z = embed_facilities(tape, model, Matrix::Zero(5, 5)).value();
  for (int j = 1; j < 5; ++j) CHECK((z.col(j) - z.col(0)).cwiseAbs().maxCoeff() == 0.0);

  Matrix asym = inst.flows();
  asym(0, 1) += 0.5;
  CHECK_THROWS_AS(embed_facilities(tape, model, asym), InvalidInput);
  CHECK_THROWS_AS(embed_facilities(tape, model, Matrix::Zero(4, 4)), ShapeError);
}

TEST_CASE("attention output distribution") {
  SplitMix64 rng(3);
  const PolicyModel model(small_config(5), 13);
  Tape tape(false);
  const AttentionVars attn = bind_attention(tape, model, "upper");
  Matrix e(8, 5);
  for (Eigen::Index k = 0; k < e.size(); ++k) e(k) = rng.uniform(-1, 1);
  e.col(3) = e.col(1);
  Matrix q(8, 1);
  for (Eigen::Index k = 0; k < q.size(); ++k) q(k) = rng.uniform(-1, 1);
  const std::vector<char> mask{1, 1, 0, 1, 1};
  const Matrix p = attention_probs(attn, tape.constant(e), tape.constant(q), mask).value();
  CHECK(std::abs(p.sum() - 1.0) < 1e-12);
  CHECK(p(0, 2) == 0.0);
  CHECK(p(0, 1) == doctest::Approx(p(0, 3)).epsilon(1e-14));

  const std::vector<char> one{1};
  CHECK(attention_probs(attn, tape.constant(e.col(0)), tape.constant(q), one).value()(0, 0) == 1.0);
}

TEST_CASE("attention gradient check") {
  SplitMix64 rng(4);
  PolicyModel model(small_config(4), 14);
  auto& store = model.params();
  store.add("test.e", nn::xavier_init(rng, 8, 4));
  store.add("test.q", nn::xavier_init(rng, 8, 1));
  const std::vector<char> mask{1, 0, 1, 1};
  const auto r = nn::gradient_check(
      [&](Tape& t) {
        const AttentionVars a = bind_attention(t, model, "lower");
        const Var logp = nn::masked_log_softmax(
            attention_logits(a, t.parameter(store, "test.e"), t.parameter(store, "test.q")), mask);
        return nn::add(nn::element(logp, 0, 2), nn::scale(nn::element(logp, 0, 3), 0.7));
      },
      store, {1e-6, 0, 1e-3, 5});
  INFO(r.worst);
  CHECK(r.max_rel_error < 1e-5);
}

TEST_CASE("embedding gradient checks") {
  SplitMix64 rng(5);
  PolicyModel model(small_config(4), 15);
  for (const char* layer : {"conv0.bias", "conv1.bias", "conv2.bias"}) {
    auto& b = model.params().value(layer);
    for (Eigen::Index k = 0; k < b.size(); ++k) b(k) = rng.uniform(-0.3, 0.3);
  }
  const QapInstance inst = generate_instance(rng, 4);
  const auto conv = nn::gradient_check(
      [&](Tape& t) { return nn::sum(nn::square(embed_locations(t, model, inst.coords()))); },
      model.params(), {1e-6, 0, 1e-3, 6});
  INFO(conv.worst);
  CHECK(conv.max_rel_error < 1e-4);
  const auto gcn = nn::gradient_check(
      [&](Tape& t) { return nn::sum(nn::square(embed_facilities(t, model, inst.flows()))); },
      model.params(), {1e-6, 0, 1e-3, 7});
  INFO(gcn.worst);
  CHECK(gcn.max_rel_error < 1e-4);
}

TEST_CASE("greedy decoding is deterministic and consistent") {
  SplitMix64 rng(6);
  for (auto sharing : {GruSharing::kAcrossChains, GruSharing::kPerChain}) {
    for (auto head : {PointerHead::kAttention, PointerHead::kMlp}) {
      const PolicyModel model(small_config(6, head, sharing), 16);
      const QapInstance inst = generate_instance(rng, 6);
      const EpisodeTrace a = decode_episode(model, inst, DecodeMode::kGreedy, nullptr, false);
      const EpisodeTrace b = decode_episode(model, inst, DecodeMode::kGreedy, nullptr, false);
      CHECK(a.steps.size() == 12);
      CHECK(a.assignment == b.assignment);
      CHECK(a.total_cost == b.total_cost);
      CHECK(rel_diff(a.total_cost, objective(inst, a.assignment)) < 1e-9);
      double lp = 0.0;
      for (std::size_t t = 0; t < a.steps.size(); ++t) {
        CHECK(a.steps[t].probs == b.steps[t].probs);
        lp += std::log(a.steps[t].probs[static_cast<std::size_t>(a.steps[t].action)]);
      }
      CHECK(std::abs(lp - a.total_log_prob()) < 1e-6);
    }
  }
}

TEST_CASE("greedy tie breaking and sampling") {
  const std::vector<double> p{0.2, 0.4, 0.4};
  const std::vector<char> all{1, 1, 1};
  CHECK(greedy_action(p, all) == 1);
  const std::vector<char> skip{1, 0, 1};
  CHECK(greedy_action(p, skip) == 2);
  SplitMix64 rng(7);
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 20000; ++i) ++counts[static_cast<std::size_t>(sample_action(p, all, rng))];
  CHECK(std::abs(counts[0] / 20000.0 - 0.2) < 0.015);
  const std::vector<double> q{0.5, 0.0, 0.5};
  for (int i = 0; i < 1000; ++i) CHECK(sample_action(q, skip, rng) != 1);
}

TEST_CASE("sampled rollouts are feasible with proper distributions") {
  SplitMix64 rng(8);
  const PolicyModel model(small_config(5), 17);
  for (int e = 0; e < 500; ++e) {
    const QapInstance inst = generate_instance(rng, 5);
    const EpisodeTrace tr = decode_episode(model, inst, DecodeMode::kSample, &rng, e % 2 == 0);
    std::set<int> locs, facs;
    for (const TraceStep& s : tr.steps) {
      const double total = std::accumulate(s.probs.begin(), s.probs.end(), 0.0);
      CHECK(std::abs(total - 1.0) < 1e-6);
      auto& used = s.role == Role::kLocation ? locs : facs;
      for (int k : used) CHECK(s.probs[static_cast<std::size_t>(k)] == 0.0);
      CHECK(used.insert(s.action).second);
    }
    CHECK(is_permutation_of_range(tr.assignment.perm()));
  }
}

TEST_CASE("untrained policy behaves like a random permutation") {
  SplitMix64 rng(9);
  const QapInstance inst = generate_instance(rng, 6);
  PolicyConfig cfg;
  cfg.n = 6;
  const PolicyModel model(cfg, 18);
  std::vector<double> costs;
  for (int e = 0; e < 1000; ++e) {
    costs.push_back(decode_episode(model, inst, DecodeMode::kSample, &rng, false).total_cost);
  }
  const double mean = std::accumulate(costs.begin(), costs.end(), 0.0) / 1000.0;
  double ss = 0.0;
  for (double c : costs) ss += (c - mean) * (c - mean);
  const double se_policy = std::sqrt(ss / 999.0) / std::sqrt(1000.0);
  const RandomBaseline rnd = random_baseline(inst, rng, 1000);
  const double se = std::sqrt(se_policy * se_policy + rnd.std_error * rnd.std_error);
  INFO(mean << " vs " << rnd.mean << " se " << se);
  CHECK(std::abs(mean - rnd.mean) < 3.0 * se);
}

TEST_CASE("decoder rejects a size mismatch") {
  SplitMix64 rng(10);
  const PolicyModel model(small_config(5), 19);
  CHECK_THROWS_AS(decode_episode(model, generate_instance(rng, 4), DecodeMode::kGreedy, nullptr, false),
                  CompatibilityError);
}

TEST_CASE("critic state encoding") {
  const auto inst = std::make_shared<const QapInstance>(unit_pair());
  MdpState s = initial_state(inst);
  Matrix enc = encode_state(*inst, s);
  CHECK(enc.rows() == 12);
  CHECK(enc.cols() == 1);
  for (int k = 8; k < 12; ++k) CHECK(enc(k, 0) == -1.0);
  CHECK(enc(1, 0) == 1.0);  // F[0][1]
  CHECK(enc(5, 0) == 1.0);  // D[0][1]
  s = step(s, 1).next;
  enc = encode_state(*inst, s);
  CHECK(enc(8, 0) == 0.5);
  CHECK(enc(9, 0) == -1.0);
  CHECK(enc(10, 0) == -1.0);
  CHECK(enc(11, 0) == -1.0);
  for (int a : {0, 0, 1}) s = step(s, a).next;
  enc = encode_state(*inst, s);
  for (int k = 8; k < 12; ++k) CHECK(enc(k, 0) >= 0.0);

  // Distinct prefixes encode differently.
  SplitMix64 rng(11);
  const auto big = std::make_shared<const QapInstance>(generate_instance(rng, 4));
  std::set<std::vector<double>> seen;
  std::function<void(const MdpState&)> walk = [&](const MdpState& st) {
    const Matrix e = encode_state(*big, st);
    CHECK(seen.insert(std::vector<double>(e.data() + 32, e.data() + 40)).second);
    if (st.terminal() || st.t() >= 3) return;
    const ActionMask m = legal_actions(st);
    for (int a = 0; a < 4; ++a)
      if (m.allowed[static_cast<std::size_t>(a)]) walk(step(st, a).next);
  };
  walk(initial_state(big));
}

TEST_CASE("critic forward") {
  SplitMix64 rng(12);
  CriticModel critic(3, 20);
  CHECK(critic.input_width() == 24);
  const auto inst = std::make_shared<const QapInstance>(generate_instance(rng, 3));
  const MdpState s = step(initial_state(inst), 2).next;
  CHECK(value(critic, *inst, s) == value(critic, *inst, s));
  critic.params().value("fc2.weight").setZero();
  critic.params().value("fc2.bias").setZero();
  CHECK(value(critic, *inst, s) == 0.0);

  CriticModel c2(3, 21);
  const Matrix enc = encode_prefixes(*inst, std::vector<int>{2, 1, 0, 0, 1, 2}, 6);
  const auto r = nn::gradient_check(
      [&](Tape& t) { return nn::sum(nn::square(critic_forward(t, c2, t.constant(enc)))); },
      c2.params(), {1e-6, 24, 1e-3, 8});
  INFO(r.worst);
  CHECK(r.max_rel_error < 1e-4);
}
