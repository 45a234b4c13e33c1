#pragma once

// Safe state/action sets over the layered state space, the backward
// construction shared by the estimated and the true sets, and reachability
// ("subsubgraphs") under the safe actions.

#include <functional>
#include <vector>

#include "safe_lsvi/mdp.hpp"

namespace safe_lsvi {

class SafetyEstimator;

/// Per-step safe states and, for each safe state, its safe actions (sorted).
/// Covers steps 0..H-1; layer H is terminal and not represented.
struct SafeSets {
  std::vector<std::vector<char>> states;               // [h][s] membership
  std::vector<std::vector<std::vector<int>>> actions;  // [h][s] -> sorted safe actions

  static SafeSets empty_like(const MdpInstance& inst);

  int horizon() const { return static_cast<int>(states.size()); }
  bool contains_state(int h, int s) const;
  bool contains_action(int h, int s, int a) const;
  int count_states(int h) const;
  int count_pairs() const;

  /// Every safe (h,s,a) of *this is also safe in `other`.
  bool is_subset_of(const SafeSets& other) const;

  friend bool operator==(const SafeSets&, const SafeSets&) = default;
};

/// Step-cost predicate: may action a be taken at (h, s) as far as the
/// step-h cost is concerned?
using StepCondition = std::function<bool(int h, int s, int a)>;

/// Backward construction from step H-1 down to 0: (s,a) is kept iff
/// `step_ok(h,s,a)` holds and (for h < H-1) every next state in the
/// support is kept at h+1. Uses only supports from `inst`.
SafeSets build_backward(const MdpInstance& inst, const StepCondition& step_ok);

/// Estimated safe sets for the current episode: the step-cost test is
/// max over the support of the optimistic cost estimate <= c_bar.
/// Throws ConsistencyError if a seed triplet drops out (its estimate is
/// exact, so that can only be a bug).
SafeSets build_safe_sets(const SafetyEstimator& est, const MdpInstance& inst);

/// Scans for closure: every safe action's support lies in the safe states
/// of the next step. Returns false on the first violation.
bool check_closure(const SafeSets& sets, const MdpInstance& inst);

/// Seed inclusion: every seed state/action is in the sets.
bool contains_seed(const SafeSets& sets, const MdpInstance& inst);

/// reach(h, s): every triplet (h', s_h', a_h', s') with h <= h' < H such
/// that s_h' is reachable from s through safe actions and a_h' is safe there.
class SubsubgraphIndex {
 public:
  const std::vector<Triplet>& reach(int h, int s) const;
  int horizon() const { return static_cast<int>(reach_.size()); }

 private:
  friend SubsubgraphIndex build_subsubgraph_index(const SafeSets&, const MdpInstance&);
  std::vector<std::vector<std::vector<Triplet>>> reach_;  // [h][s], sorted
};

/// Throws ConsistencyError if `sets` is not closed.
SubsubgraphIndex build_subsubgraph_index(const SafeSets& sets, const MdpInstance& inst);

/// Deterministic policy: action per (h, s); -1 where undefined.
struct Policy {
  std::vector<std::vector<int>> actions;  // [h][s]

  static Policy undefined(const MdpInstance& inst);
  static Policy seed_policy(const MdpInstance& inst);
  int at(int h, int s) const { return actions.at(static_cast<std::size_t>(h)).at(static_cast<std::size_t>(s)); }
};

/// Per-step states visited with non-zero probability by `policy` from s1
/// (layers 0..H). Throws ContractViolation if the policy is undefined on a
/// reachable state.
std::vector<std::vector<char>> reachable_states(const MdpInstance& inst, const Policy& policy);

/// True iff every triplet the policy visits with non-zero probability
/// satisfies the true constraint.
bool is_policy_safe_subgraph(const MdpInstance& inst, const Policy& policy);

}  // namespace safe_lsvi
