#pragma once

// Ground-truth episodic linear mixture MDP with an instantaneous hard
// constraint on every (state, action, next-state) transition.
//
// Steps are 0-based: h = 0..H-1. Layer h holds the states visited at step h;
// layer H is terminal and has no actions. Transition probabilities and
// costs are linear in a known triplet feature:
//   P_h(s'|s,a) = <mu*_h, phi(h,s,a,s')>,   c_h(s,a,s') = <gamma*_h, phi(h,s,a,s')>.
// The cost of the last transition (step H-1 into layer H) plays the role of
// the terminal-state constraint.

#include <random>
#include <span>
#include <vector>

#include "safe_lsvi/linalg.hpp"

namespace safe_lsvi {

/// Slack used when comparing a cost against c_bar, so that a cost equal to
/// the threshold up to rounding counts as satisfying the constraint.
inline constexpr double kCostTolerance = 1e-12;

inline bool within_threshold(double cost, double c_bar) { return cost <= c_bar + kCostTolerance; }

using linalg::Mat;
using linalg::Vec;

struct Triplet {
  int h = 0;
  int s = 0;
  int a = 0;
  int s_next = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
  friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

/// Known safe chain: one (s, a, s') per step plus its known cost c_h^0.
struct SeedSubgraph {
  std::vector<Triplet> triplets;
  std::vector<double> costs;
};

struct InstanceBounds {
  double D = 0.0;  // bound on |phi_V(s,a)| for any V with values in [0, H]
  double L = 0.0;  // bound on |mu*_h| and |gamma*_h|
};

/// Everything known about one (h, s, a).
struct PairData {
  double reward = 0.0;
  std::vector<int> support;  // sorted next states with non-zero probability
  std::vector<Vec> phi;      // dense: one feature per state of layer h+1
};

struct CostObservation {
  double value = 0.0;
  Triplet triplet;
};

struct StepOutcome {
  int s_next = 0;
  double reward = 0.0;
  CostObservation obs;
};

struct MdpInstance {
  int d = 0;
  int H = 0;
  std::vector<int> layer_sizes;  // H + 1 entries
  int n_actions = 0;
  std::vector<std::vector<std::vector<PairData>>> pairs;  // [h][s][a]
  std::vector<Vec> mu_star;                               // [h]
  std::vector<Vec> gamma_star;                            // [h]
  double c_bar = 0.0;
  double sigma = 0.0;
  int s1 = 0;
  SeedSubgraph seed;
  InstanceBounds bounds;

  int num_states(int h) const { return layer_sizes.at(static_cast<std::size_t>(h)); }

  const PairData& pair(int h, int s, int a) const;
  const Vec& feature(int h, int s, int a, int s_next) const;
  const Vec& feature(const Triplet& t) const { return feature(t.h, t.s, t.a, t.s_next); }
  bool in_support(int h, int s, int a, int s_next) const;

  /// <mu*_h, phi(h,s,a,s')> for any s' in layer h+1.
  double transition_prob(int h, int s, int a, int s_next) const;

  /// phi_V(s,a) = sum over the support of phi(h,s,a,s') V(s'); `next_values`
  /// is indexed by the states of layer h+1.
  Vec phi_v(int h, int s, int a, std::span<const double> next_values) const;

  const Triplet& seed_triplet(int h) const { return seed.triplets.at(static_cast<std::size_t>(h)); }
  double seed_cost(int h) const { return seed.costs.at(static_cast<std::size_t>(h)); }
  const Vec& seed_feature(int h) const { return feature(seed_triplet(h)); }

  /// Checks every structural and model invariant; throws ContractViolation
  /// naming the first one that fails.
  void validate() const;
};

/// <gamma*_h, phi(h,s,a,s')>. s' must lie in the support of (s, a).
double true_cost(const MdpInstance& inst, int h, int s, int a, int s_next);
inline double true_cost(const MdpInstance& inst, const Triplet& t) {
  return true_cost(inst, t.h, t.s, t.a, t.s_next);
}

/// Samples s' from P_h(.|s,a), returns the known reward and a noisy cost
/// observation c + zeta with zeta ~ N(0, sigma^2).
StepOutcome step(const MdpInstance& inst, int h, int s, int a, std::mt19937_64& rng);

/// max over V in {0,H}^support of |phi_V(s,a)|, maximized over all (h,s,a).
double compute_feature_bound(const MdpInstance& inst);

/// max_h max(|mu*_h|, |gamma*_h|).
double compute_parameter_bound(const MdpInstance& inst);

}  // namespace safe_lsvi
