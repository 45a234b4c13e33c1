#include "safe_lsvi/assumptions.hpp"

#include <algorithm>
#include <cmath>

#include "safe_lsvi/oracle.hpp"

namespace safe_lsvi {

namespace {

constexpr double kNormalizerFloor = 1e-12;
constexpr double kMemberTol = 1e-9;

template <class T>
std::size_t ix(T i) {
  return static_cast<std::size_t>(i);
}

// Frobenius distance between the dense next-state feature rows of two pairs.
double row_distance(const MdpInstance& inst, int h, int s1, int a1, int s2, int a2) {
  const auto& p = inst.pair(h, s1, a1);
  const auto& q = inst.pair(h, s2, a2);
  double acc = 0.0;
  for (std::size_t j = 0; j < p.phi.size(); ++j) acc += (p.phi[j] - q.phi[j]).squaredNorm();
  return std::sqrt(acc);
}

int most_likely_next(const MdpInstance& inst, int h, int s, int a) {
  int best = -1;
  double best_p = -1.0;
  for (int sn : inst.pair(h, s, a).support) {
    const double p = inst.transition_prob(h, s, a, sn);
    if (p > best_p) {
      best_p = p;
      best = sn;
    }
  }
  return best;
}

}  // namespace

double delta_phi_c(const MdpInstance& inst) {
  double spread = 0.0;
  for (int h = 0; h < inst.H; ++h) {
    for (int s = 0; s < inst.num_states(h); ++s) {
      for (int a = 0; a < inst.n_actions; ++a) {
        const auto& p = inst.pair(h, s, a);
        for (std::size_t i = 0; i < p.support.size(); ++i) {
          for (std::size_t j = i + 1; j < p.support.size(); ++j) {
            spread = std::max(spread, (p.phi[ix(p.support[i])] - p.phi[ix(p.support[j])]).norm());
          }
        }
      }
    }
  }
  return inst.bounds.L * spread;
}

double safety_margin(const MdpInstance& inst) {
  const double c0_max = *std::max_element(inst.seed.costs.begin(), inst.seed.costs.end());
  return inst.c_bar - c0_max - delta_phi_c(inst);
}

double lipschitz_delta(const MdpInstance& inst, bool* undefined) {
  const TrueSafeSets safe = true_safe_sets(inst);
  const OptimalSafePolicy opt = optimal_safe_policy(inst, safe);
  const auto occ = occupancy(inst, opt.policy);

  // Normalizers f_h and optimal rewards along the most likely optimal path.
  std::vector<double> norm_f(ix(inst.H), 0.0);
  std::vector<double> r_star(ix(inst.H), 0.0);
  for (int h = 0; h < inst.H; ++h) {
    const auto& o = occ[ix(h)];
    const int s = static_cast<int>(std::max_element(o.begin(), o.end()) - o.begin());
    const int a = opt.policy.at(h, s);
    const int sn = most_likely_next(inst, h, s, a);
    norm_f[ix(h)] = (inst.feature(h, s, a, sn) - inst.seed_feature(h)).norm();
    r_star[ix(h)] = inst.pair(h, s, a).reward;
  }

  // Descendant of (s,a) at step h' > h: most likely next state, optimal action.
  const auto descendants = [&](int h, int s, int a) {
    std::vector<std::pair<int, int>> out;
    int cs = most_likely_next(inst, h, s, a);
    for (int hp = h + 1; hp < inst.H; ++hp) {
      const int ca = opt.policy.at(hp, cs);
      out.emplace_back(cs, ca);
      cs = most_likely_next(inst, hp, cs, ca);
    }
    return out;
  };

  double delta = 0.0;
  bool any_pair = false;
  for (int h = 0; h < inst.H; ++h) {
    std::vector<std::pair<int, int>> pairs;
    for (int s = 0; s < inst.num_states(h); ++s) {
      if (!safe.contains_state(h, s)) continue;
      for (int a : safe.actions[ix(h)][ix(s)]) pairs.emplace_back(s, a);
    }
    if (!pairs.empty()) any_pair = true;
    if (norm_f[ix(h)] < kNormalizerFloor) continue;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto desc_i = descendants(h, pairs[i].first, pairs[i].second);
      for (std::size_t j = i + 1; j < pairs.size(); ++j) {
        const double f = row_distance(inst, h, pairs[i].first, pairs[i].second, pairs[j].first, pairs[j].second) /
                         norm_f[ix(h)];
        if (f < kNormalizerFloor) continue;
        if (r_star[ix(h)] > 0.0) {
          const double dr = std::abs(inst.pair(h, pairs[i].first, pairs[i].second).reward -
                                     inst.pair(h, pairs[j].first, pairs[j].second).reward);
          delta = std::max(delta, dr / r_star[ix(h)] / f);
        }
        const auto desc_j = descendants(h, pairs[j].first, pairs[j].second);
        for (std::size_t k = 0; k < desc_i.size(); ++k) {
          const int hp = h + 1 + static_cast<int>(k);
          if (norm_f[ix(hp)] < kNormalizerFloor) continue;
          const double fp =
              row_distance(inst, hp, desc_i[k].first, desc_i[k].second, desc_j[k].first, desc_j[k].second) /
              norm_f[ix(hp)];
          delta = std::max(delta, fp / f);
        }
      }
    }
  }
  if (undefined) *undefined = !any_pair;
  return delta;
}

bool star_convex_check(const MdpInstance& inst, int grid_points) {
  const int n_grid = std::max(grid_points, 2);
  for (int h = 0; h < inst.H; ++h) {
    const Triplet& t0 = inst.seed_triplet(h);
    const int n_next = inst.num_states(h + 1);
    const auto seed_row = [&](int sn) -> Vec {
      return sn == t0.s_next ? inst.seed_feature(h) : Vec::Zero(inst.d);
    };
    for (int s = 0; s < inst.num_states(h); ++s) {
      // Members: every action's feature row plus the seed row.
      std::vector<std::vector<Vec>> members;
      for (int a = 0; a < inst.n_actions; ++a) members.push_back(inst.pair(h, s, a).phi);
      std::vector<Vec> seed_full;
      for (int sn = 0; sn < n_next; ++sn) seed_full.push_back(seed_row(sn));
      members.push_back(seed_full);

      for (int a = 0; a < inst.n_actions; ++a) {
        const auto& row = inst.pair(h, s, a).phi;
        for (int g = 0; g < n_grid; ++g) {
          const double t = static_cast<double>(g) / static_cast<double>(n_grid - 1);
          bool found = false;
          for (const auto& m : members) {
            double err = 0.0;
            for (int sn = 0; sn < n_next && err <= kMemberTol; ++sn) {
              err = std::max(err, (t * row[ix(sn)] + (1.0 - t) * seed_full[ix(sn)] - m[ix(sn)]).cwiseAbs().maxCoeff());
            }
            if (err <= kMemberTol) {
              found = true;
              break;
            }
          }
          if (!found) return false;
        }
      }
    }
  }
  return true;
}

InstanceDiagnostics check_assumptions(const MdpInstance& inst) {
  InstanceDiagnostics out;
  out.delta_phi_c = delta_phi_c(inst);
  out.delta_c = safety_margin(inst);
  out.star_convex_ok = star_convex_check(inst);

  const TrueSafeSets safe = true_safe_sets(inst);
  int total = 0;
  int n_safe = 0;
  for (int h = 0; h < inst.H; ++h) {
    total += inst.num_states(h);
    n_safe += safe.count_states(h);
  }
  out.true_safe_fraction = total > 0 ? static_cast<double>(n_safe) / total : 0.0;

  if (!safe.contains_state(0, inst.s1)) {
    out.delta_undefined = true;
    out.flags.push_back("delta_undefined");
  } else {
    bool undefined = false;
    const double raw = lipschitz_delta(inst, &undefined);
    out.delta_undefined = undefined;
    if (undefined) out.flags.push_back("delta_undefined");
    if (raw > 1.0) {
      out.delta_clamped = true;
      out.flags.push_back("delta_clamped");
    }
    out.delta = std::min(raw, 1.0);
  }
  if (!out.star_convex_ok) out.flags.push_back("star_convexity_not_met");
  if (out.delta_c <= 0.0) out.flags.push_back("nonpositive_safety_margin");
  return out;
}

}  // namespace safe_lsvi
