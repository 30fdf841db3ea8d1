// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <memory>

#include "helpers.hpp"
#include "qapforge/errors.hpp"
#include "qapforge/mdp.hpp"

using namespace qapforge;
using namespace qapforge::testing;

namespace {

std::shared_ptr<const QapInstance> shared(QapInstance inst) {
  return std::make_shared<const QapInstance>(std::move(inst));
}

int pick_allowed(const ActionMask& m, SplitMix64& rng) {
  int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(m.count())));
  for (std::size_t i = 0; i < m.allowed.size(); ++i) {
    if (m.allowed[i] && k-- == 0) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

TEST_CASE("initial state and masks") {
  SplitMix64 rng(1);
  const auto inst = shared(generate_instance(rng, 10));
  MdpState s = initial_state(inst);
  CHECK_FALSE(s.terminal());
  ActionMask m = legal_actions(s);
  CHECK(m.role == Role::kLocation);
  CHECK(m.count() == 10);

  s = step(s, 3).next;
  m = legal_actions(s);
  CHECK(m.role == Role::kFacility);
  CHECK(m.count() == 10);
  s = step(s, 7).next;
  m = legal_actions(s);
  CHECK(m.role == Role::kLocation);
  CHECK(m.allowed[3] == 0);
  CHECK(m.count() == 9);
  CHECK_THROWS_AS(step(s, 3), IllegalActionError);
  CHECK_THROWS_AS(step(s, 10), IllegalActionError);
  CHECK_THROWS_AS(assignment_of(s), TerminalStateError);

  for (int k = 0; k < 10; ++k) {
    if (k == 3) continue;
    s = step(s, k).next;
    if (s.t() == 19) CHECK(legal_actions(s).count() == 1);
    s = step(s, pick_allowed(legal_actions(s), rng)).next;
  }
  CHECK(s.terminal());
  CHECK_THROWS_AS(legal_actions(s), TerminalStateError);
  CHECK_THROWS_AS(step(s, 0), TerminalStateError);
}

TEST_CASE("n=2 step costs") {
  const auto inst = shared(unit_pair());
  MdpState s = initial_state(inst);
  std::vector<double> costs;
  for (int a : {0, 0, 1, 1}) {
    StepResult r = step(s, a);
    costs.push_back(r.cost);
    s = r.next;
  }
  CHECK(costs == std::vector<double>{0.0, 0.0, 0.0, 2.0});
  CHECK(assignment_of(s) == Assignment::identity(2));

  MdpState u = initial_state(inst);
  for (int a : {1, 0, 0, 1}) u = step(u, a).next;
  CHECK(assignment_of(u).perm() == std::vector<int>{1, 0});
}

TEST_CASE("decomposition identity, general form, interleaving invariance") {
  SplitMix64 rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + trial % 11;
    const auto inst = shared(generate_instance(rng, n));
    MdpState s = initial_state(inst);
    MdpState g = s;
    double total = 0.0;
    double total_general = 0.0;
    while (!s.terminal()) {
      const int a = pick_allowed(legal_actions(s), rng);
      const StepResult r = step(s, a);
      const StepResult rg = step(g, a, CostForm::kGeneral);
      if (s.t() % 2 == 0 || s.t() == 1) CHECK(r.cost == 0.0);
      CHECK(rel_diff(r.cost, rg.cost) < 1e-12);
      total += r.cost;
      total_general += rg.cost;
      s = r.next;
      g = rg.next;
    }
    CHECK(s.t() == 2 * n);
    CHECK(is_permutation_of_range(assignment_of(s).perm()));
    const double obj = objective(*inst, assignment_of(s));
    CHECK(rel_diff(total, obj) < 1e-9);
    CHECK(rel_diff(total_general, obj) < 1e-9);

    // The same assignment reached in location order gives the same total.
    const Assignment a = assignment_of(s);
    MdpState o = initial_state(inst);
    double ordered = 0.0;
    for (int k = 0; k < n; ++k) {
      o = step(o, k).next;
      const StepResult r = step(o, a[k]);
      ordered += r.cost;
      o = r.next;
    }
    CHECK(rel_diff(ordered, total) < 1e-9);
  }
}

TEST_CASE("identity-order episode") {
  SplitMix64 rng(3);
  const auto inst = shared(generate_instance(rng, 5));
  MdpState s = initial_state(inst);
  for (int k = 0; k < 5; ++k) {
    s = step(s, k).next;
    s = step(s, k).next;
  }
  CHECK(assignment_of(s) == Assignment::identity(5));
  CHECK(s.sequence().size() == 10);
}
