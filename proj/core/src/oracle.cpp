#include "safe_lsvi/oracle.hpp"

#include <string>

#include "safe_lsvi/errors.hpp"

namespace safe_lsvi {

TrueSafeSets true_safe_sets(const MdpInstance& inst) {
  const auto step_ok = [&](int h, int s, int a) {
    for (int sn : inst.pair(h, s, a).support) {
      if (!within_threshold(true_cost(inst, h, s, a, sn), inst.c_bar)) return false;
    }
    return true;
  };
  TrueSafeSets out;
  static_cast<SafeSets&>(out) = build_backward(inst, step_ok);
  return out;
}

OptimalSafePolicy optimal_safe_policy(const MdpInstance& inst) { return optimal_safe_policy(inst, true_safe_sets(inst)); }

OptimalSafePolicy optimal_safe_policy(const MdpInstance& inst, const TrueSafeSets& safe) {
  if (!safe.contains_state(0, inst.s1)) {
    throw ConsistencyError("optimal_safe_policy: s1 has no truly safe action");
  }
  OptimalSafePolicy out;
  out.policy = Policy::undefined(inst);
  out.values.resize(static_cast<std::size_t>(inst.H + 1));
  out.values[static_cast<std::size_t>(inst.H)].assign(static_cast<std::size_t>(inst.num_states(inst.H)), 0.0);
  for (int h = inst.H - 1; h >= 0; --h) {
    const auto& next = out.values[static_cast<std::size_t>(h + 1)];
    auto& cur = out.values[static_cast<std::size_t>(h)];
    cur.assign(static_cast<std::size_t>(inst.num_states(h)), 0.0);
    for (int s = 0; s < inst.num_states(h); ++s) {
      if (!safe.contains_state(h, s)) continue;
      double best = -1.0;
      int best_a = -1;
      for (int a : safe.actions[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)]) {
        const auto& p = inst.pair(h, s, a);
        double q = p.reward;
        for (int sn : p.support) q += inst.transition_prob(h, s, a, sn) * next[static_cast<std::size_t>(sn)];
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      cur[static_cast<std::size_t>(s)] = best;
      out.policy.actions[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)] = best_a;
    }
  }
  out.v_star = out.values[0][static_cast<std::size_t>(inst.s1)];
  return out;
}

double evaluate_policy(const MdpInstance& inst, const Policy& policy) {
  const auto reach = reachable_states(inst, policy);
  std::vector<double> next(static_cast<std::size_t>(inst.num_states(inst.H)), 0.0);
  for (int h = inst.H - 1; h >= 0; --h) {
    std::vector<double> cur(static_cast<std::size_t>(inst.num_states(h)), 0.0);
    for (int s = 0; s < inst.num_states(h); ++s) {
      if (!reach[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)]) continue;
      const int a = policy.at(h, s);
      const auto& p = inst.pair(h, s, a);
      double v = p.reward;
      for (int sn : p.support) v += inst.transition_prob(h, s, a, sn) * next[static_cast<std::size_t>(sn)];
      cur[static_cast<std::size_t>(s)] = v;
    }
    next = std::move(cur);
  }
  return next[static_cast<std::size_t>(inst.s1)];
}

std::vector<std::vector<double>> occupancy(const MdpInstance& inst, const Policy& policy) {
  std::vector<std::vector<double>> occ(static_cast<std::size_t>(inst.H + 1));
  for (int h = 0; h <= inst.H; ++h) occ[static_cast<std::size_t>(h)].assign(static_cast<std::size_t>(inst.num_states(h)), 0.0);
  occ[0][static_cast<std::size_t>(inst.s1)] = 1.0;
  for (int h = 0; h < inst.H; ++h) {
    for (int s = 0; s < inst.num_states(h); ++s) {
      const double w = occ[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)];
      if (w == 0.0) continue;
      const int a = policy.at(h, s);
      if (a < 0 || a >= inst.n_actions) {
        throw ContractViolation("occupancy: policy undefined on reachable state (h=" + std::to_string(h) +
                                ", s=" + std::to_string(s) + ")");
      }
      for (int sn : inst.pair(h, s, a).support) {
        occ[static_cast<std::size_t>(h + 1)][static_cast<std::size_t>(sn)] += w * inst.transition_prob(h, s, a, sn);
      }
    }
  }
  return occ;
}

}  // namespace safe_lsvi
