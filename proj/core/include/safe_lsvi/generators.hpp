#pragma once

// Instance construction. Every generator goes through a tabular embedding:
// probabilities and costs are chosen per triplet first, then features and
// parameters are built so that normalization holds by construction.
//
// Embedding at step h with feature scale a and rotation R_h:
//   phi(s,a,s') = R_h [a p(s'|s,a), a c(s,a,s'), z(s,a)]   on the support
//   phi(s,a,s') = 0                                          off the support
//   mu*_h = R_h e_0 / a,  gamma*_h = R_h e_1 / a
// so L = 1/a. The nuisance block z is shared by every next state of a pair;
// it adds feature diversity without widening within-support spreads.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "safe_lsvi/mdp.hpp"

namespace safe_lsvi {

/// Dense tables indexed [h][s][a][s'] over the states of layer h+1.
struct TabularSpec {
  int d = 2;
  std::vector<int> layer_sizes;  // H + 1 entries
  int n_actions = 1;
  std::vector<std::vector<std::vector<std::vector<double>>>> prob;
  std::vector<std::vector<std::vector<std::vector<double>>>> cost;  // read on the support only
  std::vector<std::vector<std::vector<double>>> reward;
  std::vector<std::vector<std::vector<std::vector<double>>>> nuisance;  // [h][s][a] -> d-2 values; may be empty
  std::vector<int> seed_actions;  // per step, along the chain from s1
  double c_bar = 0.5;
  double sigma = 0.0;
  int s1 = 0;
  double feature_scale = 1.0;
};

/// Builds the instance described by `spec`. Random rotations are drawn from
/// `rng` when given, otherwise R_h = I. Bounds D and L are computed exactly.
/// Throws ContractViolation when the result fails validation.
MdpInstance embed_tabular(const TabularSpec& spec, std::mt19937_64* rng = nullptr);

struct GeneratorConfig {
  int d = 4;
  int H = 4;
  int states_per_step = 6;
  int n_actions = 3;
  double c_bar = 0.9;
  double sigma = 0.05;
  double unsafe_fraction = 0.2;    // hazard states per layer 1..H-1
  int max_support = 2;
  double feature_scale = 1.0;
  double nuisance_scale = 0.3;
  double seed_cost_max = 0.2;
  double seed_reward_max = 0.2;
  double risky_action_prob = 0.2;  // non-hazard pair whose cost exceeds c_bar
  double prob_jitter = 0.05;
  double cost_jitter = 0.02;
  int max_retries = 200;
  std::uint64_t seed = 0;
};

/// Random instance satisfying every model invariant, with a deterministic
/// seed chain, at least one hazard state per step 1..H-1 when
/// `unsafe_fraction > 0`, and a positive safety margin Delta_c.
/// Throws ConfigError for impossible settings and GenerationError when the
/// retry budget runs out.
MdpInstance gen_random(const GeneratorConfig& cfg, std::mt19937_64& rng);
MdpInstance gen_random(const GeneratorConfig& cfg);

/// Two-instance lower-bound family. d = 2, five actions, layer 0 = {s1},
/// five states on every later layer; action i at s1 leads to state i, later
/// states move straight ahead under every action. Costs and rewards follow
/// the fixed tables (a(4) is unsafe in variant 1 and safe in variant 2).
/// Requires c_bar > c10, c_bar - c10 - delta_phi_c > 0 and 2 c_bar - c10 <= 1.
MdpInstance gen_lower_bound_instance(int variant, double c_bar, double c10, double delta_phi_c, int H,
                                     double sigma = 0.0);

/// Five-step, two-action instance with one unsafe state on the last step:
/// the state it is reached from has no other successor, so the
/// action leading into that corridor is unsafe although every cost on the
/// corridor up to the last step is below c_bar. Layers are 0-based, so the
/// unsafe state sits on layer 4, the trap on layer 3 and the entry on layer 2.
struct CorridorInstance {
  MdpInstance inst;
  int unsafe_layer = 0;   // layer of the unsafe state (= H - 1)
  int unsafe_state = 0;
  int trap_layer = 0;     // layer of the state whose only successor is unsafe
  int trap_state = 0;
  int entry_layer = 0;    // layer where the excluded action is taken
  int entry_state = 0;
  int entry_action = 0;
};

CorridorInstance gen_corridor_instance(double sigma = 0.0);

}  // namespace safe_lsvi
