// SPDX-License-Identifier: Apache-2.0
#include "qapforge/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qapforge/errors.hpp"

namespace qapforge {

using nn::Var;

InferenceResult solve_greedy(const PolicyModel& policy, const QapInstance& instance) {
  EpisodeTrace trace = decode_episode(policy, instance, DecodeMode::kGreedy, nullptr, false);
  const double cost = objective(instance, trace.assignment);
  return {std::move(trace.assignment), cost};
}

namespace {

struct BeamEntry {
  MdpState state;
  Var h_upper;
  Var h_lower;
  Var upper_input;
  double log_prob = 0.0;
  double cost = 0.0;
};

struct Candidate {
  int parent;
  int action;
  double log_prob;
  double step_prob;
};

}  // namespace

std::vector<BeamPath> beam_paths(const PolicyModel& policy, const QapInstance& instance,
                                 int beam_width) {
  if (beam_width < 1) throw InvalidInput("beam width must be >= 1");
  nn::Tape tape(false);
  PointerDecoder dec(policy, instance, tape, false, nullptr);
  std::vector<BeamEntry> beam;
  beam.push_back({MdpState(std::shared_ptr<const QapInstance>(std::shared_ptr<void>(), &instance)),
                  dec.zero_hidden(), dec.zero_hidden(), dec.start_token(), 0.0, 0.0});

  const int n = instance.n();
  for (int t = 0; t < 2 * n; ++t) {
    std::vector<Candidate> cands;
    std::vector<PointerDecoder::Block> blocks;
    blocks.reserve(beam.size());
    for (std::size_t e = 0; e < beam.size(); ++e) {
      BeamEntry& entry = beam[e];
      const ActionMask mask = legal_actions(entry.state);
      PointerDecoder::Block b =
          mask.role == Role::kLocation
              ? dec.upper(entry.h_upper, entry.upper_input)
              : dec.lower(entry.h_lower, dec.location_embedding(entry.state.sequence().back()));
      const nn::Matrix probs = nn::masked_softmax_value(b.logits.value(), mask.allowed);
      for (int a = 0; a < n; ++a) {
        if (!mask.allowed[static_cast<std::size_t>(a)]) continue;
        cands.push_back({static_cast<int>(e), a, entry.log_prob + std::log(probs(a)), probs(a)});
      }
      blocks.push_back(b);
    }
    // Parents are already in beam order, so comparing (parent, action) is the
    // lexicographic comparison of the full action sequences.
    auto better = [&](const Candidate& x, const Candidate& y) {
      if (x.log_prob != y.log_prob) return x.log_prob > y.log_prob;
      if (x.parent == y.parent && x.step_prob != y.step_prob) return x.step_prob > y.step_prob;
      const auto& sx = beam[static_cast<std::size_t>(x.parent)].state.sequence();
      const auto& sy = beam[static_cast<std::size_t>(y.parent)].state.sequence();
      if (sx != sy) return std::lexicographical_compare(sx.begin(), sx.end(), sy.begin(), sy.end());
      return x.action < y.action;
    };
    const std::size_t keep = std::min(cands.size(), static_cast<std::size_t>(beam_width));
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep),
                      cands.end(), better);

    std::vector<BeamEntry> next;
    next.reserve(keep);
    for (std::size_t c = 0; c < keep; ++c) {
      const Candidate& cand = cands[c];
      const BeamEntry& parent = beam[static_cast<std::size_t>(cand.parent)];
      const PointerDecoder::Block& b = blocks[static_cast<std::size_t>(cand.parent)];
      auto [state, step_cost] = step(parent.state, cand.action);
      BeamEntry child{std::move(state), parent.h_upper, parent.h_lower, parent.upper_input,
                      cand.log_prob, parent.cost + step_cost};
      if (parent.state.next_role() == Role::kLocation) {
        child.h_upper = b.hidden;
      } else {
        child.h_lower = b.hidden;
        child.upper_input = dec.facility_embedding(cand.action);
      }
      next.push_back(std::move(child));
    }
    beam = std::move(next);
  }

  std::vector<BeamPath> out;
  out.reserve(beam.size());
  for (const auto& e : beam) out.push_back({e.state.sequence(), e.log_prob, e.cost});
  return out;
}

InferenceResult solve_beam(const PolicyModel& policy, const QapInstance& instance,
                           int beam_width) {
  const auto paths = beam_paths(policy, instance, beam_width);
  std::shared_ptr<const QapInstance> alias(std::shared_ptr<void>(), &instance);
  InferenceResult best;
  best.cost = std::numeric_limits<double>::infinity();
  for (const auto& p : paths) {
    MdpState s(alias);
    for (int a : p.sequence) s = step(s, a).next;
    Assignment a = assignment_of(s);
    const double c = objective(instance, a);
    if (c < best.cost) best = {std::move(a), c};
  }
  return best;
}

}  // namespace qapforge
