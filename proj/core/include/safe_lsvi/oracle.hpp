#pragma once

// Ground-truth computations used as the regret reference and the safety
// reference: exact safe sets, the optimal safe policy, exact evaluation.

#include <vector>

#include "safe_lsvi/mdp.hpp"
#include "safe_lsvi/safe_sets.hpp"

namespace safe_lsvi {

/// Safe sets under the true costs. Same shape as the estimated sets.
struct TrueSafeSets : SafeSets {};

TrueSafeSets true_safe_sets(const MdpInstance& inst);

struct OptimalSafePolicy {
  Policy policy;                            // defined on every truly safe state
  std::vector<std::vector<double>> values;  // V*_h(s) on safe states, 0 elsewhere; [0..H]
  double v_star = 0.0;                      // V*_0(s1)
};

OptimalSafePolicy optimal_safe_policy(const MdpInstance& inst);
OptimalSafePolicy optimal_safe_policy(const MdpInstance& inst, const TrueSafeSets& safe);

/// Exact V^pi_0(s1) by backward induction over the states the policy reaches.
double evaluate_policy(const MdpInstance& inst, const Policy& policy);

/// State-occupancy distribution per layer (0..H) under `policy`.
std::vector<std::vector<double>> occupancy(const MdpInstance& inst, const Policy& policy);

}  // namespace safe_lsvi
