#include "safe_lsvi/safe_sets.hpp"

#include <algorithm>
#include <deque>
#include <string>

#include "safe_lsvi/errors.hpp"
#include "safe_lsvi/safety_estimator.hpp"

namespace safe_lsvi {

SafeSets SafeSets::empty_like(const MdpInstance& inst) {
  SafeSets out;
  out.states.resize(static_cast<std::size_t>(inst.H));
  out.actions.resize(static_cast<std::size_t>(inst.H));
  for (int h = 0; h < inst.H; ++h) {
    out.states[static_cast<std::size_t>(h)].assign(static_cast<std::size_t>(inst.num_states(h)), 0);
    out.actions[static_cast<std::size_t>(h)].resize(static_cast<std::size_t>(inst.num_states(h)));
  }
  return out;
}

bool SafeSets::contains_state(int h, int s) const {
  if (h < 0 || h >= horizon()) return false;
  const auto& layer = states[static_cast<std::size_t>(h)];
  return s >= 0 && s < static_cast<int>(layer.size()) && layer[static_cast<std::size_t>(s)] != 0;
}

bool SafeSets::contains_action(int h, int s, int a) const {
  if (!contains_state(h, s)) return false;
  const auto& acts = actions[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)];
  return std::binary_search(acts.begin(), acts.end(), a);
}

int SafeSets::count_states(int h) const {
  const auto& layer = states.at(static_cast<std::size_t>(h));
  return static_cast<int>(std::count(layer.begin(), layer.end(), char{1}));
}

int SafeSets::count_pairs() const {
  int n = 0;
  for (const auto& layer : actions) {
    for (const auto& acts : layer) n += static_cast<int>(acts.size());
  }
  return n;
}

bool SafeSets::is_subset_of(const SafeSets& other) const {
  for (int h = 0; h < horizon(); ++h) {
    for (int s = 0; s < static_cast<int>(states[static_cast<std::size_t>(h)].size()); ++s) {
      if (!contains_state(h, s)) continue;
      if (!other.contains_state(h, s)) return false;
      for (int a : actions[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)]) {
        if (!other.contains_action(h, s, a)) return false;
      }
    }
  }
  return true;
}

SafeSets build_backward(const MdpInstance& inst, const StepCondition& step_ok) {
  SafeSets out = SafeSets::empty_like(inst);
  for (int h = inst.H - 1; h >= 0; --h) {
    for (int s = 0; s < inst.num_states(h); ++s) {
      auto& acts = out.actions[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)];
      for (int a = 0; a < inst.n_actions; ++a) {
        bool ok = true;
        if (h + 1 < inst.H) {
          for (int sn : inst.pair(h, s, a).support) {
            if (!out.contains_state(h + 1, sn)) {
              ok = false;
              break;
            }
          }
        }
        if (ok && step_ok(h, s, a)) acts.push_back(a);
      }
      out.states[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)] = acts.empty() ? 0 : 1;
    }
  }
  return out;
}

SafeSets build_safe_sets(const SafetyEstimator& est, const MdpInstance& inst) {
  const auto step_ok = [&](int h, int s, int a) {
    const auto& p = inst.pair(h, s, a);
    for (int sn : p.support) {
      if (!within_threshold(est.estimate(h, p.phi[static_cast<std::size_t>(sn)]).c_tilde, inst.c_bar)) return false;
    }
    return true;
  };
  SafeSets out = build_backward(inst, step_ok);
  if (!contains_seed(out, inst)) {
    throw ConsistencyError("build_safe_sets: the seed subgraph fell out of the estimated safe sets");
  }
  return out;
}

bool check_closure(const SafeSets& sets, const MdpInstance& inst) {
  for (int h = 0; h + 1 < inst.H; ++h) {
    for (int s = 0; s < inst.num_states(h); ++s) {
      if (!sets.contains_state(h, s)) continue;
      const auto& acts = sets.actions[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)];
      if (acts.empty()) return false;
      for (int a : acts) {
        for (int sn : inst.pair(h, s, a).support) {
          if (!sets.contains_state(h + 1, sn)) return false;
        }
      }
    }
  }
  return true;
}

bool contains_seed(const SafeSets& sets, const MdpInstance& inst) {
  for (int h = 0; h < inst.H; ++h) {
    const auto& t = inst.seed_triplet(h);
    if (!sets.contains_action(h, t.s, t.a)) return false;
  }
  return true;
}

const std::vector<Triplet>& SubsubgraphIndex::reach(int h, int s) const {
  return reach_.at(static_cast<std::size_t>(h)).at(static_cast<std::size_t>(s));
}

SubsubgraphIndex build_subsubgraph_index(const SafeSets& sets, const MdpInstance& inst) {
  if (!check_closure(sets, inst)) {
    throw ConsistencyError("build_subsubgraph_index: safe sets are not closed");
  }
  SubsubgraphIndex index;
  index.reach_.resize(static_cast<std::size_t>(inst.H));
  // Backward: reach(h,s) = own safe triplets  U  reach(h+1, s') for s' in their supports.
  for (int h = inst.H - 1; h >= 0; --h) {
    auto& layer = index.reach_[static_cast<std::size_t>(h)];
    layer.resize(static_cast<std::size_t>(inst.num_states(h)));
    for (int s = 0; s < inst.num_states(h); ++s) {
      if (!sets.contains_state(h, s)) continue;
      auto& out = layer[static_cast<std::size_t>(s)];
      std::vector<int> next_states;
      for (int a : sets.actions[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)]) {
        for (int sn : inst.pair(h, s, a).support) {
          out.push_back(Triplet{h, s, a, sn});
          next_states.push_back(sn);
        }
      }
      if (h + 1 < inst.H) {
        std::sort(next_states.begin(), next_states.end());
        next_states.erase(std::unique(next_states.begin(), next_states.end()), next_states.end());
        for (int sn : next_states) {
          const auto& sub = index.reach_[static_cast<std::size_t>(h + 1)][static_cast<std::size_t>(sn)];
          out.insert(out.end(), sub.begin(), sub.end());
        }
      }
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
    }
  }
  return index;
}

Policy Policy::undefined(const MdpInstance& inst) {
  Policy p;
  p.actions.resize(static_cast<std::size_t>(inst.H));
  for (int h = 0; h < inst.H; ++h) p.actions[static_cast<std::size_t>(h)].assign(static_cast<std::size_t>(inst.num_states(h)), -1);
  return p;
}

Policy Policy::seed_policy(const MdpInstance& inst) {
  Policy p = undefined(inst);
  for (int h = 0; h < inst.H; ++h) {
    const auto& t = inst.seed_triplet(h);
    p.actions[static_cast<std::size_t>(h)][static_cast<std::size_t>(t.s)] = t.a;
  }
  return p;
}

std::vector<std::vector<char>> reachable_states(const MdpInstance& inst, const Policy& policy) {
  std::vector<std::vector<char>> reach(static_cast<std::size_t>(inst.H + 1));
  for (int h = 0; h <= inst.H; ++h) reach[static_cast<std::size_t>(h)].assign(static_cast<std::size_t>(inst.num_states(h)), 0);
  reach[0][static_cast<std::size_t>(inst.s1)] = 1;
  for (int h = 0; h < inst.H; ++h) {
    for (int s = 0; s < inst.num_states(h); ++s) {
      if (!reach[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)]) continue;
      const int a = policy.at(h, s);
      if (a < 0 || a >= inst.n_actions) {
        throw ContractViolation("policy undefined on reachable state (h=" + std::to_string(h) +
                                ", s=" + std::to_string(s) + ")");
      }
      for (int sn : inst.pair(h, s, a).support) reach[static_cast<std::size_t>(h + 1)][static_cast<std::size_t>(sn)] = 1;
    }
  }
  return reach;
}

bool is_policy_safe_subgraph(const MdpInstance& inst, const Policy& policy) {
  const auto reach = reachable_states(inst, policy);
  for (int h = 0; h < inst.H; ++h) {
    for (int s = 0; s < inst.num_states(h); ++s) {
      if (!reach[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)]) continue;
      const int a = policy.at(h, s);
      for (int sn : inst.pair(h, s, a).support) {
        if (!within_threshold(true_cost(inst, h, s, a, sn), inst.c_bar)) return false;
      }
    }
  }
  return true;
}

}  // namespace safe_lsvi
