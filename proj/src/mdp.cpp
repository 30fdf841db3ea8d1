// SPDX-License-Identifier: Apache-2.0
#include "qapforge/mdp.hpp"

#include <algorithm>
#include <string>

#include "qapforge/errors.hpp"

namespace qapforge {

int ActionMask::count() const {
  return static_cast<int>(std::count(allowed.begin(), allowed.end(), char{1}));
}

MdpState::MdpState(std::shared_ptr<const QapInstance> instance)
    : instance_(std::move(instance)) {
  if (!instance_) throw InvalidInput("state requires an instance");
  const auto n = static_cast<std::size_t>(instance_->n());
  sequence_.reserve(2 * n);
  location_used_.assign(n, 0);
  facility_used_.assign(n, 0);
}

MdpState initial_state(std::shared_ptr<const QapInstance> instance) {
  return MdpState(std::move(instance));
}

ActionMask legal_actions(const MdpState& state) {
  if (state.terminal()) throw TerminalStateError("no legal actions in a terminal state");
  ActionMask mask;
  mask.role = state.next_role();
  const auto& used =
      mask.role == Role::kLocation ? state.location_used() : state.facility_used();
  mask.allowed.resize(used.size());
  std::transform(used.begin(), used.end(), mask.allowed.begin(),
                 [](char u) { return static_cast<char>(!u); });
  return mask;
}

StepResult step(const MdpState& state, int action, CostForm form) {
  if (state.terminal()) throw TerminalStateError("step called on a terminal state");
  const int n = state.n();
  if (action < 0 || action >= n) {
    throw IllegalActionError("action " + std::to_string(action) + " out of range");
  }
  const auto a = static_cast<std::size_t>(action);
  MdpState next = state;
  double cost = 0.0;
  if (state.next_role() == Role::kLocation) {
    if (state.location_used_[a]) {
      throw IllegalActionError("location " + std::to_string(action) + " already selected");
    }
    next.location_used_[a] = 1;
  } else {
    if (state.facility_used_[a]) {
      throw IllegalActionError("facility " + std::to_string(action) + " already placed");
    }
    next.facility_used_[a] = 1;
    const QapInstance& inst = state.instance();
    const auto& seq = state.sequence_;
    const int loc = seq.back();
    // The self pair p = (t-1)/2 is omitted: it would pair f_t with itself at
    // zero distance.
    for (std::size_t p = 0; p + 1 < seq.size(); p += 2) {
      const int prev_loc = seq[p];
      const int prev_fac = seq[p + 1];
      if (form == CostForm::kSymmetric) {
        cost += 2.0 * inst.flow(prev_fac, action) * inst.distance(prev_loc, loc);
      } else {
        cost += inst.flow(prev_fac, action) * inst.distance(prev_loc, loc) +
                inst.flow(action, prev_fac) * inst.distance(loc, prev_loc);
      }
    }
  }
  next.sequence_.push_back(action);
  return {std::move(next), cost};
}

Assignment assignment_of(const MdpState& s) {
  if (!s.terminal()) throw TerminalStateError("assignment_of requires a terminal state");
  std::vector<int> perm(static_cast<std::size_t>(s.n()));
  const auto& seq = s.sequence();
  for (std::size_t p = 0; p < seq.size(); p += 2) {
    perm[static_cast<std::size_t>(seq[p])] = seq[p + 1];
  }
  return Assignment(std::move(perm));
}

}  // namespace qapforge
