#pragma once

// Small hand-built instances and brute-force references shared by the tests.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "safe_lsvi/generators.hpp"
#include "safe_lsvi/mdp.hpp"
#include "safe_lsvi/oracle.hpp"

namespace test_support {

using safe_lsvi::MdpInstance;
using safe_lsvi::TabularSpec;

/// Tabular instance with identity rotations. Unset pairs move
/// deterministically to state 0 of the next layer with cost 0, reward 0.
class TabularBuilder {
 public:
  TabularBuilder(int d, std::vector<int> layer_sizes, int n_actions) {
    spec_.d = d;
    spec_.layer_sizes = std::move(layer_sizes);
    spec_.n_actions = n_actions;
    const int H = static_cast<int>(spec_.layer_sizes.size()) - 1;
    spec_.seed_actions.assign(static_cast<std::size_t>(H), 0);
    spec_.prob.resize(static_cast<std::size_t>(H));
    spec_.cost.resize(static_cast<std::size_t>(H));
    spec_.reward.resize(static_cast<std::size_t>(H));
    for (int h = 0; h < H; ++h) {
      const auto n = static_cast<std::size_t>(spec_.layer_sizes[static_cast<std::size_t>(h)]);
      const auto n_next = static_cast<std::size_t>(spec_.layer_sizes[static_cast<std::size_t>(h + 1)]);
      std::vector<double> to_zero(n_next, 0.0);
      to_zero[0] = 1.0;
      spec_.prob[static_cast<std::size_t>(h)].assign(n, std::vector<std::vector<double>>(
                                                            static_cast<std::size_t>(n_actions), to_zero));
      spec_.cost[static_cast<std::size_t>(h)].assign(
          n, std::vector<std::vector<double>>(static_cast<std::size_t>(n_actions), std::vector<double>(n_next, 0.0)));
      spec_.reward[static_cast<std::size_t>(h)].assign(n, std::vector<double>(static_cast<std::size_t>(n_actions), 0.0));
    }
  }

  /// Same cost on every next state of the pair.
  TabularBuilder& set(int h, int s, int a, const std::vector<std::pair<int, double>>& next, double cost,
                      double reward) {
    std::vector<std::pair<int, double>> costs;
    for (const auto& [sn, p] : next) costs.emplace_back(sn, cost);
    return set_costs(h, s, a, next, costs, reward);
  }

  TabularBuilder& set_costs(int h, int s, int a, const std::vector<std::pair<int, double>>& next,
                            const std::vector<std::pair<int, double>>& costs, double reward) {
    auto& prob = row(spec_.prob, h, s, a);
    auto& cost = row(spec_.cost, h, s, a);
    std::fill(prob.begin(), prob.end(), 0.0);
    std::fill(cost.begin(), cost.end(), 0.0);
    for (const auto& [sn, p] : next) prob[static_cast<std::size_t>(sn)] = p;
    for (const auto& [sn, c] : costs) cost[static_cast<std::size_t>(sn)] = c;
    spec_.reward[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] = reward;
    return *this;
  }

  TabularBuilder& seed_actions(std::vector<int> actions) {
    spec_.seed_actions = std::move(actions);
    return *this;
  }
  TabularBuilder& c_bar(double v) {
    spec_.c_bar = v;
    return *this;
  }
  TabularBuilder& sigma(double v) {
    spec_.sigma = v;
    return *this;
  }

  MdpInstance build() const { return safe_lsvi::embed_tabular(spec_); }
  const TabularSpec& spec() const { return spec_; }

 private:
  static std::vector<double>& row(std::vector<std::vector<std::vector<std::vector<double>>>>& t, int h, int s, int a) {
    return t[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
  }

  TabularSpec spec_;
};

/// One state per layer, one action, constant reward and cost, c_bar 0.5.
inline MdpInstance chain_instance(int H, double reward, double cost) {
  std::vector<int> layers(static_cast<std::size_t>(H + 1), 1);
  TabularBuilder b(2, layers, 1);
  for (int h = 0; h < H; ++h) b.set(h, 0, 0, {{0, 1.0}}, cost, reward);
  return b.build();
}

/// Reference for lipschitz_delta written from its definition: ordered
/// pairs, features flattened into one vector per pair, descendants walked
/// step by step.
inline double brute_force_delta(const MdpInstance& inst) {
  using safe_lsvi::Vec;
  const auto safe = safe_lsvi::true_safe_sets(inst);
  const auto opt = safe_lsvi::optimal_safe_policy(inst, safe);
  const auto occ = safe_lsvi::occupancy(inst, opt.policy);

  const auto flat = [&](int h, int s, int a) {
    const int n = inst.num_states(h + 1);
    Vec out(static_cast<Eigen::Index>(n) * inst.d);
    for (int sn = 0; sn < n; ++sn) out.segment(static_cast<Eigen::Index>(sn) * inst.d, inst.d) = inst.feature(h, s, a, sn);
    return out;
  };
  const auto argmax_next = [&](int h, int s, int a) {
    int best = -1;
    for (int sn = 0; sn < inst.num_states(h + 1); ++sn) {
      if (!inst.in_support(h, s, a, sn)) continue;
      if (best < 0 || inst.transition_prob(h, s, a, sn) > inst.transition_prob(h, s, a, best)) best = sn;
    }
    return best;
  };

  std::vector<double> f(static_cast<std::size_t>(inst.H));
  std::vector<double> r(static_cast<std::size_t>(inst.H));
  for (int h = 0; h < inst.H; ++h) {
    int s = 0;
    for (int x = 1; x < inst.num_states(h); ++x) {
      if (occ[static_cast<std::size_t>(h)][static_cast<std::size_t>(x)] >
          occ[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)]) {
        s = x;
      }
    }
    const int a = opt.policy.at(h, s);
    f[static_cast<std::size_t>(h)] = (inst.feature(h, s, a, argmax_next(h, s, a)) - inst.seed_feature(h)).norm();
    r[static_cast<std::size_t>(h)] = inst.pair(h, s, a).reward;
  }

  double best = 0.0;
  for (int h = 0; h < inst.H; ++h) {
    if (f[static_cast<std::size_t>(h)] < 1e-12) continue;
    for (int s1 = 0; s1 < inst.num_states(h); ++s1) {
      for (int a1 = 0; a1 < inst.n_actions; ++a1) {
        if (!safe.contains_action(h, s1, a1)) continue;
        for (int s2 = 0; s2 < inst.num_states(h); ++s2) {
          for (int a2 = 0; a2 < inst.n_actions; ++a2) {
            if (!safe.contains_action(h, s2, a2) || (s1 == s2 && a1 == a2)) continue;
            const double ratio = (flat(h, s1, a1) - flat(h, s2, a2)).norm() / f[static_cast<std::size_t>(h)];
            if (ratio < 1e-12) continue;
            if (r[static_cast<std::size_t>(h)] > 0.0) {
              const double dr = std::abs(inst.pair(h, s1, a1).reward - inst.pair(h, s2, a2).reward);
              best = std::max(best, dr / r[static_cast<std::size_t>(h)] / ratio);
            }
            int x = argmax_next(h, s1, a1);
            int y = argmax_next(h, s2, a2);
            for (int hp = h + 1; hp < inst.H; ++hp) {
              const int ax = opt.policy.at(hp, x);
              const int ay = opt.policy.at(hp, y);
              if (f[static_cast<std::size_t>(hp)] >= 1e-12) {
                const double rp = (flat(hp, x, ax) - flat(hp, y, ay)).norm() / f[static_cast<std::size_t>(hp)];
                best = std::max(best, rp / ratio);
              }
              x = argmax_next(hp, x, ax);
              y = argmax_next(hp, y, ay);
            }
          }
        }
      }
    }
  }
  return best;
}

}  // namespace test_support
