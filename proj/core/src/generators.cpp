#include "safe_lsvi/generators.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "safe_lsvi/assumptions.hpp"
#include "safe_lsvi/errors.hpp"

namespace safe_lsvi {

namespace {

template <class T>
std::size_t ix(T i) {
  return static_cast<std::size_t>(i);
}

Mat random_rotation(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = g(rng);
  }
  Eigen::HouseholderQR<Mat> qr(m);
  Mat q = qr.householderQ();
  // Sign fix makes the draw Haar distributed.
  const Mat r = qr.matrixQR();
  for (int j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

template <class Table>
void expect_layers(const Table& t, std::size_t n, const char* name) {
  if (t.size() != n) throw ContractViolation(std::string("embed_tabular: ") + name + " has the wrong number of steps");
}

}  // namespace

MdpInstance embed_tabular(const TabularSpec& spec, std::mt19937_64* rng) {
  if (spec.d < 2) throw ContractViolation("embed_tabular: need d >= 2");
  if (spec.layer_sizes.size() < 2) throw ContractViolation("embed_tabular: need at least one step");
  if (!(spec.feature_scale > 0.0)) throw ContractViolation("embed_tabular: feature_scale must be positive");
  const int H = static_cast<int>(spec.layer_sizes.size()) - 1;
  expect_layers(spec.prob, ix(H), "prob");
  expect_layers(spec.cost, ix(H), "cost");
  expect_layers(spec.reward, ix(H), "reward");
  if (!spec.nuisance.empty()) expect_layers(spec.nuisance, ix(H), "nuisance");
  if (static_cast<int>(spec.seed_actions.size()) != H) throw ContractViolation("embed_tabular: one seed action per step");

  const double a = spec.feature_scale;
  MdpInstance inst;
  inst.d = spec.d;
  inst.H = H;
  inst.layer_sizes = spec.layer_sizes;
  inst.n_actions = spec.n_actions;
  inst.c_bar = spec.c_bar;
  inst.sigma = spec.sigma;
  inst.s1 = spec.s1;
  inst.pairs.resize(ix(H));

  for (int h = 0; h < H; ++h) {
    const Mat rot = rng ? random_rotation(spec.d, *rng) : Mat::Identity(spec.d, spec.d);
    inst.mu_star.push_back(rot.col(0) / a);
    inst.gamma_star.push_back(rot.col(1) / a);
    const int n = spec.layer_sizes[ix(h)];
    const int n_next = spec.layer_sizes[ix(h + 1)];
    auto& layer = inst.pairs[ix(h)];
    layer.resize(ix(n));
    for (int s = 0; s < n; ++s) {
      layer[ix(s)].resize(ix(spec.n_actions));
      for (int act = 0; act < spec.n_actions; ++act) {
        const auto& prob = spec.prob.at(ix(h)).at(ix(s)).at(ix(act));
        const auto& cost = spec.cost.at(ix(h)).at(ix(s)).at(ix(act));
        if (static_cast<int>(prob.size()) != n_next || static_cast<int>(cost.size()) != n_next) {
          throw ContractViolation("embed_tabular: probability/cost row has the wrong length");
        }
        auto& pd = layer[ix(s)][ix(act)];
        pd.reward = spec.reward.at(ix(h)).at(ix(s)).at(ix(act));
        pd.phi.assign(ix(n_next), Vec::Zero(spec.d));
        Vec base = Vec::Zero(spec.d);
        if (!spec.nuisance.empty()) {
          const auto& z = spec.nuisance.at(ix(h)).at(ix(s)).at(ix(act));
          if (static_cast<int>(z.size()) > spec.d - 2) throw ContractViolation("embed_tabular: nuisance block too long");
          for (std::size_t j = 0; j < z.size(); ++j) base(static_cast<Eigen::Index>(j + 2)) = z[j];
        }
        for (int sn = 0; sn < n_next; ++sn) {
          if (!(prob[ix(sn)] > 0.0)) continue;
          pd.support.push_back(sn);
          Vec b = base;
          b(0) = a * prob[ix(sn)];
          b(1) = a * cost[ix(sn)];
          pd.phi[ix(sn)] = rot * b;
        }
      }
    }
  }

  int s = spec.s1;
  for (int h = 0; h < H; ++h) {
    const int act = spec.seed_actions[ix(h)];
    const auto& pd = inst.pair(h, s, act);
    if (pd.support.size() != 1) throw ContractViolation("embed_tabular: seed pair must be deterministic");
    const Triplet t{h, s, act, pd.support.front()};
    inst.seed.triplets.push_back(t);
    inst.seed.costs.push_back(inst.gamma_star[ix(h)].dot(pd.phi[ix(t.s_next)]));
    s = t.s_next;
  }
  inst.bounds.D = compute_feature_bound(inst);
  inst.bounds.L = compute_parameter_bound(inst);
  inst.validate();
  return inst;
}

MdpInstance gen_random(const GeneratorConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  return gen_random(cfg, rng);
}

MdpInstance gen_random(const GeneratorConfig& cfg, std::mt19937_64& rng) {
  if (cfg.d < 2) throw ConfigError("gen_random: d must be at least 2");
  if (cfg.H < 1) throw ConfigError("gen_random: H must be at least 1");
  if (cfg.states_per_step < 1) throw ConfigError("gen_random: states_per_step must be at least 1");
  if (cfg.n_actions < 1) throw ConfigError("gen_random: need at least one action");
  if (cfg.max_support < 1) throw ConfigError("gen_random: max_support must be at least 1");
  if (!(cfg.c_bar > 0.0 && cfg.c_bar < 1.0)) throw ConfigError("gen_random: c_bar must lie in (0,1)");
  if (!(cfg.unsafe_fraction >= 0.0 && cfg.unsafe_fraction < 1.0)) throw ConfigError("gen_random: unsafe_fraction must lie in [0,1)");
  if (cfg.unsafe_fraction > 0.0 && cfg.states_per_step < 2) throw ConfigError("gen_random: hazards need at least two states per step");
  if (!(cfg.prob_jitter >= 0.0 && cfg.prob_jitter < 1.0)) throw ConfigError("gen_random: prob_jitter must lie in [0,1)");
  if (!(cfg.cost_jitter >= 0.0)) throw ConfigError("gen_random: cost_jitter must be non-negative");
  if (!(cfg.seed_cost_max >= 0.0 && cfg.seed_cost_max <= cfg.c_bar)) throw ConfigError("gen_random: seed_cost_max must lie in [0, c_bar]");
  constexpr double kUnsafeGap = 0.02;
  const double unsafe_lo = cfg.c_bar + kUnsafeGap + cfg.cost_jitter;
  const double unsafe_hi = 1.0 - cfg.cost_jitter;
  const bool need_unsafe_costs = cfg.unsafe_fraction > 0.0 || cfg.risky_action_prob > 0.0;
  if (need_unsafe_costs && !(unsafe_lo < unsafe_hi)) {
    throw ConfigError("gen_random: no room above c_bar for unsafe costs (lower c_bar or cost_jitter)");
  }
  if (!(cfg.cost_jitter < cfg.c_bar - cfg.cost_jitter)) throw ConfigError("gen_random: cost_jitter too large for c_bar");

  const int S = cfg.states_per_step;
  const int H = cfg.H;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto unif = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
  const auto pick = [&](int n) { return static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng)); };

  for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
    TabularSpec spec;
    spec.d = cfg.d;
    spec.layer_sizes.assign(ix(H + 1), S);
    spec.layer_sizes[0] = 1;
    spec.n_actions = cfg.n_actions;
    spec.c_bar = cfg.c_bar;
    spec.sigma = cfg.sigma;
    spec.s1 = 0;
    spec.feature_scale = cfg.feature_scale;

    std::vector<int> seed_state(ix(H + 1), 0);
    for (int h = 1; h <= H; ++h) seed_state[ix(h)] = pick(S);
    spec.seed_actions.resize(ix(H));
    for (int h = 0; h < H; ++h) spec.seed_actions[ix(h)] = pick(cfg.n_actions);

    std::vector<std::vector<char>> hazard(ix(H + 1));
    for (int h = 0; h <= H; ++h) hazard[ix(h)].assign(ix(spec.layer_sizes[ix(h)]), 0);
    if (cfg.unsafe_fraction > 0.0) {
      for (int h = 1; h < H; ++h) {
        const int n_haz = std::clamp(static_cast<int>(std::lround(cfg.unsafe_fraction * S)), 1, S - 1);
        std::vector<int> pool;
        for (int s = 0; s < S; ++s) {
          if (s != seed_state[ix(h)]) pool.push_back(s);
        }
        std::shuffle(pool.begin(), pool.end(), rng);
        for (int i = 0; i < n_haz; ++i) hazard[ix(h)][ix(pool[ix(i)])] = 1;
      }
    }

    spec.prob.resize(ix(H));
    spec.cost.resize(ix(H));
    spec.reward.resize(ix(H));
    spec.nuisance.resize(ix(H));
    std::vector<double> seed_cost(ix(H));
    std::vector<std::vector<double>> seed_z(ix(H), std::vector<double>(ix(cfg.d - 2)));
    for (int h = 0; h < H; ++h) {
      seed_cost[ix(h)] = unif(0.0, cfg.seed_cost_max);
      for (double& v : seed_z[ix(h)]) v = cfg.feature_scale * unif(-cfg.nuisance_scale, cfg.nuisance_scale);
    }
    // Blend weights along each state's action line; t = 0 is the anchor.
    std::vector<double> grid(ix(cfg.n_actions), 0.0);
    for (int j = 1; j < cfg.n_actions; ++j) grid[ix(j)] = static_cast<double>(j) / (cfg.n_actions - 1);

    for (int h = 0; h < H; ++h) {
      const int n = spec.layer_sizes[ix(h)];
      const int n_next = spec.layer_sizes[ix(h + 1)];
      std::vector<int> safe_next;
      for (int sn = 0; sn < n_next; ++sn) {
        if (!hazard[ix(h + 1)][ix(sn)]) safe_next.push_back(sn);
      }
      std::vector<int> all_next(ix(n_next));
      std::iota(all_next.begin(), all_next.end(), 0);
      spec.prob[ix(h)].resize(ix(n));
      spec.cost[ix(h)].resize(ix(n));
      spec.reward[ix(h)].resize(ix(n));
      spec.nuisance[ix(h)].resize(ix(n));
      const double c0 = seed_cost[ix(h)];
      const auto& z0 = seed_z[ix(h)];
      for (int s = 0; s < n; ++s) {
        const bool is_hazard = hazard[ix(h)][ix(s)] != 0;
        const bool is_seed_state = s == seed_state[ix(h)];
        // Far end of the line: shared target cost, nuisance and reward.
        const bool risky = u01(rng) < cfg.risky_action_prob;
        const double c_target = (is_hazard || risky) ? unif(unsafe_lo, unsafe_hi)
                                                     : unif(cfg.cost_jitter, cfg.c_bar - cfg.cost_jitter);
        std::vector<double> z_target(ix(cfg.d - 2));
        for (double& v : z_target) v = cfg.feature_scale * unif(-cfg.nuisance_scale, cfg.nuisance_scale);
        const double r_target = u01(rng);
        const double r_anchor = unif(0.0, cfg.seed_reward_max);

        std::vector<int> order(ix(cfg.n_actions));
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        if (is_seed_state) {
          // The seed action carries t = 0.
          std::swap(*std::find(order.begin(), order.end(), spec.seed_actions[ix(h)]), order[0]);
        }
        std::vector<double> t_of(ix(cfg.n_actions));
        for (int j = 0; j < cfg.n_actions; ++j) t_of[ix(order[ix(j)])] = grid[ix(j)];

        for (int act = 0; act < cfg.n_actions; ++act) {
          const double t = t_of[ix(act)];
          std::vector<double> prob(ix(n_next), 0.0);
          std::vector<double> cost(ix(n_next), 0.0);
          std::vector<double> z(ix(cfg.d - 2));
          double reward = (1.0 - t) * r_anchor + t * r_target;
          if (is_hazard) {
            std::vector<int> pool = all_next;
            std::shuffle(pool.begin(), pool.end(), rng);
            const int k = 1 + pick(std::min<int>(cfg.max_support, n_next));
            for (int i = 0; i < k; ++i) {
              prob[ix(pool[ix(i)])] = 1.0 / k;
              cost[ix(pool[ix(i)])] = std::clamp(c_target + unif(-cfg.cost_jitter, cfg.cost_jitter), 0.0, 1.0);
            }
            for (std::size_t i = 0; i < z.size(); ++i) z[i] = z_target[i];
            reward = r_target;
          } else if (t == 0.0) {
            // Anchor: feature identical to the seed feature of this step.
            const int target = is_seed_state ? seed_state[ix(h + 1)] : safe_next[ix(pick(static_cast<int>(safe_next.size())))];
            prob[ix(target)] = 1.0;
            cost[ix(target)] = c0;
            z = z0;
            if (is_seed_state) reward = unif(0.0, cfg.seed_reward_max);
          } else {
            std::vector<int> pool = all_next;
            std::shuffle(pool.begin(), pool.end(), rng);
            const int k = 1 + pick(std::min<int>(cfg.max_support, n_next));
            double total = 0.0;
            for (int i = 0; i < k; ++i) {
              const double w = 1.0 + unif(-cfg.prob_jitter, cfg.prob_jitter);
              prob[ix(pool[ix(i)])] = w;
              total += w;
            }
            for (double& p : prob) p /= total;
            const double pm = 1.0 / k;
            for (int i = 0; i < k; ++i) {
              const double c = (1.0 - t) * pm * c0 + t * c_target + unif(-cfg.cost_jitter, cfg.cost_jitter);
              cost[ix(pool[ix(i)])] = std::clamp(c, 0.0, 1.0);
            }
            for (std::size_t i = 0; i < z.size(); ++i) z[i] = (1.0 - t) * pm * z0[i] + t * z_target[i];
          }
          spec.prob[ix(h)][ix(s)].push_back(std::move(prob));
          spec.cost[ix(h)][ix(s)].push_back(std::move(cost));
          spec.reward[ix(h)][ix(s)].push_back(reward);
          spec.nuisance[ix(h)][ix(s)].push_back(std::move(z));
        }
      }
    }

    MdpInstance inst = embed_tabular(spec, &rng);
    if (safety_margin(inst) > 0.0) return inst;
  }
  throw GenerationError("gen_random: no instance with a positive safety margin after " +
                        std::to_string(cfg.max_retries) + " attempts");
}

MdpInstance gen_lower_bound_instance(int variant, double c_bar, double c10, double delta_phi_c, int H, double sigma) {
  if (variant != 1 && variant != 2) throw ConfigError("gen_lower_bound_instance: variant must be 1 or 2");
  if (H < 1) throw ConfigError("gen_lower_bound_instance: H must be at least 1");
  if (!(c10 >= 0.0)) throw ConfigError("gen_lower_bound_instance: c10 must be non-negative");
  if (!(delta_phi_c >= 0.0)) throw ConfigError("gen_lower_bound_instance: delta_phi_c must be non-negative");
  if (!(c_bar > c10)) throw ConfigError("gen_lower_bound_instance: need c_bar > c10");
  if (!(c_bar - c10 - delta_phi_c > 0.0)) throw ConfigError("gen_lower_bound_instance: margin c_bar - c10 - delta_phi_c must be positive");
  if (!(2.0 * c_bar - c10 <= 1.0)) throw ConfigError("gen_lower_bound_instance: 2 c_bar - c10 must not exceed 1");

  constexpr int kWidth = 5;
  const double high = 2.0 * c_bar - c10;
  const double fourth = variant == 1 ? high - delta_phi_c : c10 + delta_phi_c;
  const double costs[kWidth] = {c10, high, c10, fourth, high};
  const double rewards[kWidth] = {1.0 / 8.0, 1.0, 0.0, 0.5, 0.5};

  TabularSpec spec;
  spec.d = 2;
  spec.layer_sizes.assign(ix(H + 1), kWidth);
  spec.layer_sizes[0] = 1;
  spec.n_actions = kWidth;
  spec.c_bar = c_bar;
  spec.sigma = sigma;
  spec.seed_actions.assign(ix(H), 0);
  spec.prob.resize(ix(H));
  spec.cost.resize(ix(H));
  spec.reward.resize(ix(H));
  for (int h = 0; h < H; ++h) {
    const int n = spec.layer_sizes[ix(h)];
    spec.prob[ix(h)].resize(ix(n));
    spec.cost[ix(h)].resize(ix(n));
    spec.reward[ix(h)].resize(ix(n));
    for (int s = 0; s < n; ++s) {
      for (int act = 0; act < kWidth; ++act) {
        // Step 0 branches on the action; later steps carry the branch forward.
        const int branch = h == 0 ? act : s;
        std::vector<double> prob(ix(kWidth), 0.0);
        std::vector<double> cost(ix(kWidth), 0.0);
        prob[ix(branch)] = 1.0;
        cost[ix(branch)] = costs[branch];
        spec.prob[ix(h)][ix(s)].push_back(std::move(prob));
        spec.cost[ix(h)][ix(s)].push_back(std::move(cost));
        spec.reward[ix(h)][ix(s)].push_back(rewards[branch]);
      }
    }
  }
  return embed_tabular(spec);
}

CorridorInstance gen_corridor_instance(double sigma) {
  constexpr int H = 5;
  constexpr int kActions = 2;
  struct Edge {
    std::vector<std::pair<int, double>> next;  // (state, probability)
    double cost;
    double reward;
  };
  // [h][s][a]
  const std::vector<std::vector<std::vector<Edge>>> table = {
      {{{{{0, 1.0}}, 0.10, 0.10}, {{{0, 0.5}, {1, 0.5}}, 0.20, 0.30}}},
      {{{{{0, 1.0}}, 0.10, 0.10}, {{{1, 1.0}}, 0.30, 0.40}},
       {{{{0, 1.0}}, 0.20, 0.20}, {{{1, 1.0}}, 0.25, 0.50}}},
      {{{{{0, 1.0}}, 0.10, 0.10}, {{{1, 1.0}}, 0.20, 0.90}},
       {{{{0, 1.0}}, 0.20, 0.30}, {{{1, 1.0}}, 0.20, 0.90}}},
      {{{{{0, 1.0}}, 0.10, 0.10}, {{{0, 1.0}}, 0.30, 0.60}},
       {{{{1, 1.0}}, 0.20, 1.00}, {{{1, 1.0}}, 0.20, 1.00}}},
      {{{{{0, 1.0}}, 0.10, 0.10}, {{{1, 1.0}}, 0.30, 0.50}},
       {{{{0, 1.0}}, 0.90, 1.00}, {{{1, 1.0}}, 0.80, 1.00}}},
  };

  TabularSpec spec;
  spec.d = 4;
  spec.layer_sizes = {1, 2, 2, 2, 2, 2};
  spec.n_actions = kActions;
  spec.c_bar = 0.5;
  spec.sigma = sigma;
  spec.seed_actions.assign(ix(H), 0);
  spec.prob.resize(ix(H));
  spec.cost.resize(ix(H));
  spec.reward.resize(ix(H));
  spec.nuisance.resize(ix(H));
  for (int h = 0; h < H; ++h) {
    const auto& layer = table[ix(h)];
    for (std::size_t s = 0; s < layer.size(); ++s) {
      spec.prob[ix(h)].emplace_back();
      spec.cost[ix(h)].emplace_back();
      spec.reward[ix(h)].emplace_back();
      spec.nuisance[ix(h)].emplace_back();
      for (int act = 0; act < kActions; ++act) {
        const Edge& e = layer[s][ix(act)];
        std::vector<double> prob(2, 0.0);
        std::vector<double> cost(2, 0.0);
        for (const auto& [sn, p] : e.next) {
          prob[ix(sn)] = p;
          cost[ix(sn)] = e.cost;
        }
        spec.prob[ix(h)].back().push_back(std::move(prob));
        spec.cost[ix(h)].back().push_back(std::move(cost));
        spec.reward[ix(h)].back().push_back(e.reward);
        spec.nuisance[ix(h)].back().push_back({0.1 * static_cast<double>(s + 1), 0.1 * static_cast<double>(act + 1)});
      }
    }
  }

  CorridorInstance out;
  out.inst = embed_tabular(spec);
  out.unsafe_layer = 4;
  out.unsafe_state = 1;
  out.trap_layer = 3;
  out.trap_state = 1;
  out.entry_layer = 2;
  out.entry_state = 0;
  out.entry_action = 1;
  return out;
}

}  // namespace safe_lsvi
