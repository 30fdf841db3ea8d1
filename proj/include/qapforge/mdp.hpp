// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include "qapforge/instance.hpp"

namespace qapforge {

enum class Role { kLocation, kFacility };

struct ActionMask {
  Role role = Role::kLocation;
  std::vector<char> allowed;

  int count() const;
};

/// Pair-cost convention for the incremental cost of a facility placement.
enum class CostForm {
  /// 2 F[f_prev][f_t] D[l_prev][l_{t-1}], valid for symmetric F and D.
  kSymmetric,
  /// F[f_prev][f_t] D[l_prev][l_{t-1}] + F[f_t][f_prev] D[l_{t-1}][l_prev].
  kGeneral,
};

struct StepResult;

/// State s_t of the alternating location/facility decision process.
/// sequence[2p] is a location, sequence[2p+1] the facility placed there.
/// Immutable: step() returns a fresh state.
class MdpState {
 public:
  explicit MdpState(std::shared_ptr<const QapInstance> instance);

  const QapInstance& instance() const noexcept { return *instance_; }
  const std::shared_ptr<const QapInstance>& instance_ptr() const noexcept { return instance_; }
  int n() const noexcept { return instance_->n(); }
  int t() const noexcept { return static_cast<int>(sequence_.size()); }
  bool terminal() const noexcept { return t() == 2 * n(); }
  /// Role of the next action (location at even t).
  Role next_role() const noexcept { return t() % 2 == 0 ? Role::kLocation : Role::kFacility; }

  const std::vector<int>& sequence() const noexcept { return sequence_; }
  const std::vector<char>& location_used() const noexcept { return location_used_; }
  const std::vector<char>& facility_used() const noexcept { return facility_used_; }

 private:
  friend StepResult step(const MdpState&, int, CostForm);

  std::shared_ptr<const QapInstance> instance_;
  std::vector<int> sequence_;
  std::vector<char> location_used_;
  std::vector<char> facility_used_;
};

struct StepResult {
  MdpState next;
  double cost;
};

MdpState initial_state(std::shared_ptr<const QapInstance> instance);

/// Throws TerminalStateError at t == 2n.
ActionMask legal_actions(const MdpState& state);

/// Appends `action`. Even t: cost 0. Odd t: the pair costs between the new
/// facility at l_{t-1} and every earlier placement. Throws IllegalActionError
/// for a used index and TerminalStateError past the end.
StepResult step(const MdpState& state, int action, CostForm form = CostForm::kSymmetric);

/// perm[sequence[2p]] = sequence[2p+1]. Throws TerminalStateError if the
/// episode is incomplete.
Assignment assignment_of(const MdpState& terminal_state);

}  // namespace qapforge
