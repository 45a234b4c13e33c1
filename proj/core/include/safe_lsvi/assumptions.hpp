#pragma once

// Measured structural constants of an instance: the within-support feature
// spread, the safety margin, the Lipschitz constant delta and a discretized
// star-convexity check.

#include <string>
#include <vector>

#include "safe_lsvi/mdp.hpp"

namespace safe_lsvi {

struct InstanceDiagnostics {
  double delta = 0.0;        // in [0,1]; clamped to 1 when a ratio exceeds 1
  double delta_phi_c = 0.0;  // L * max within-support feature spread
  double delta_c = 0.0;      // c_bar - max_h c0_h - delta_phi_c
  bool star_convex_ok = false;
  double true_safe_fraction = 0.0;  // truly safe states over all states of layers 0..H-1
  bool delta_clamped = false;
  bool delta_undefined = false;  // no truly safe pair
  std::vector<std::string> flags;
};

/// L * max over (h,s,a) and s', s'' in the support of |phi(s,a,s') - phi(s,a,s'')|.
double delta_phi_c(const MdpInstance& inst);

/// c_bar - max_h c0_h - delta_phi_c(inst).
double safety_margin(const MdpInstance& inst);

/// Largest ratio of normalized reward and descendant-feature differences to
/// the normalized feature difference, over pairs of truly safe (s,a) at the
/// same step. The normalizer at step h is |phi(s*_h,a*_h,s*_{h+1}) - phi0_h|
/// along the most likely path of the optimal safe policy; steps where it is
/// below 1e-12 are skipped, as are pairs with identical features.
/// Descendants follow the most likely next state and the optimal action.
double lipschitz_delta(const MdpInstance& inst, bool* undefined = nullptr);

/// Discretized star-convexity: for every state and action, the blend
/// t Phi(s,a) + (1-t) Phi0 (dense next-state feature matrices) must coincide
/// with a member of the state's feature set for t on an 11-point grid.
bool star_convex_check(const MdpInstance& inst, int grid_points = 11);

InstanceDiagnostics check_assumptions(const MdpInstance& inst);

}  // namespace safe_lsvi
