#include <gtest/gtest.h>

#include <deque>
#include <random>
#include <set>

#include "safe_lsvi/errors.hpp"
#include "safe_lsvi/generators.hpp"
#include "safe_lsvi/oracle.hpp"
#include "safe_lsvi/safe_sets.hpp"
#include "safe_lsvi/safety_estimator.hpp"
#include "test_support.hpp"

namespace {

using namespace safe_lsvi;

// Two states per layer, two actions; no non-seed feature is parallel to the
// seed feature of its step.
MdpInstance two_by_two() {
  test_support::TabularBuilder b(2, {1, 2, 2, 2}, 2);
  for (int h = 0; h < 3; ++h) {
    b.set(h, 0, 0, {{0, 1.0}}, 0.1, 0.1);
    b.set(h, 0, 1, {{1, 1.0}}, 0.2, 0.6);
    if (h > 0) {
      b.set(h, 1, 0, {{0, 0.5}, {1, 0.5}}, 0.3, 0.5);
      b.set(h, 1, 1, {{1, 1.0}}, 0.4, 0.9);
    }
  }
  return b.c_bar(0.5).build();
}

std::set<Triplet> bfs_reach(const SafeSets& sets, const MdpInstance& inst, int h0, int s0) {
  std::set<Triplet> out;
  std::set<std::pair<int, int>> seen{{h0, s0}};
  std::deque<std::pair<int, int>> queue{{h0, s0}};
  while (!queue.empty()) {
    const auto [h, s] = queue.front();
    queue.pop_front();
    if (h >= inst.H) continue;
    for (int a = 0; a < inst.n_actions; ++a) {
      if (!sets.contains_action(h, s, a)) continue;
      for (int sn : inst.pair(h, s, a).support) {
        out.insert(Triplet{h, s, a, sn});
        if (seen.insert({h + 1, sn}).second) queue.emplace_back(h + 1, sn);
      }
    }
  }
  return out;
}

// Every path from (h, s) under `policy`, checked triplet by triplet.
bool paths_safe(const MdpInstance& inst, const Policy& policy, int h, int s) {
  if (h == inst.H) return true;
  const int a = policy.at(h, s);
  for (int sn : inst.pair(h, s, a).support) {
    if (!within_threshold(true_cost(inst, h, s, a, sn), inst.c_bar)) return false;
    if (!paths_safe(inst, policy, h + 1, sn)) return false;
  }
  return true;
}

Policy random_policy(const MdpInstance& inst, std::mt19937_64& rng) {
  Policy p = Policy::undefined(inst);
  for (int h = 0; h < inst.H; ++h) {
    for (int s = 0; s < inst.num_states(h); ++s) {
      p.actions[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)] =
          static_cast<int>(rng() % static_cast<unsigned>(inst.n_actions));
    }
  }
  return p;
}

TEST(SafeSets, HugeRadiusKeepsOnlySeedDirection) {
  const MdpInstance inst = two_by_two();
  SafetyEstimator est(inst, 2.0, 1e6);
  const SafeSets sets = build_safe_sets(est, inst);
  EXPECT_EQ(sets.count_pairs(), inst.H);
  EXPECT_TRUE(contains_seed(sets, inst));
  for (int h = 0; h < inst.H; ++h) EXPECT_EQ(sets.count_states(h), 1);
}

TEST(SafeSets, ExactEstimatesReproduceTruth) {
  const MdpInstance inst = two_by_two();
  SafetyEstimator est(inst, 2.0, 1e-9);
  for (int h = 0; h < inst.H; ++h) {
    for (int i = 0; i < 50; ++i) {
      for (int s = 0; s < inst.num_states(h); ++s) {
        for (int a = 0; a < inst.n_actions; ++a) {
          for (int sn : inst.pair(h, s, a).support) est.ingest(h, inst.feature(h, s, a, sn), true_cost(inst, h, s, a, sn));
        }
      }
    }
  }
  EXPECT_EQ(build_safe_sets(est, inst), static_cast<const SafeSets&>(true_safe_sets(inst)));
}

TEST(SafeSets, BackwardConstructionByHand) {
  // Step 1: state 1 action 1 costs 0.4; step 2 action 1 at state 1 is
  // the only unsafe pair when c_bar is 0.35.
  test_support::TabularBuilder b(2, {1, 2, 2}, 2);
  b.set(0, 0, 0, {{0, 1.0}}, 0.1, 0.1).set(0, 0, 1, {{1, 1.0}}, 0.2, 0.5);
  b.set(1, 0, 0, {{0, 1.0}}, 0.1, 0.1).set(1, 0, 1, {{1, 1.0}}, 0.2, 0.5);
  b.set(1, 1, 0, {{0, 1.0}}, 0.4, 0.5).set(1, 1, 1, {{1, 1.0}}, 0.5, 0.5);
  const MdpInstance inst = b.c_bar(0.35).build();
  const TrueSafeSets truth = true_safe_sets(inst);
  EXPECT_TRUE(truth.contains_action(0, 0, 0));
  EXPECT_FALSE(truth.contains_action(0, 0, 1));
  EXPECT_FALSE(truth.contains_state(1, 1));
  EXPECT_TRUE(truth.contains_action(1, 0, 1));
}

TEST(SafeSets, ClosureAndSoundnessOnRandomEstimators) {
  std::mt19937_64 rng(31);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GeneratorConfig cfg;
    cfg.seed = seed;
    cfg.sigma = 0.0;
    const MdpInstance inst = gen_random(cfg);
    SafetyEstimator est(inst, inst.d, 2.0);
    const TrueSafeSets truth = true_safe_sets(inst);
    for (int round = 0; round < 30; ++round) {
      for (int i = 0; i < 10; ++i) {
        const int h = static_cast<int>(rng() % static_cast<unsigned>(inst.H));
        const int s = static_cast<int>(rng() % static_cast<unsigned>(inst.num_states(h)));
        const int a = static_cast<int>(rng() % static_cast<unsigned>(inst.n_actions));
        const int sn = inst.pair(h, s, a).support.front();
        est.ingest(h, inst.feature(h, s, a, sn), true_cost(inst, h, s, a, sn));
      }
      const SafeSets sets = build_safe_sets(est, inst);
      EXPECT_TRUE(check_closure(sets, inst));
      EXPECT_TRUE(contains_seed(sets, inst));
      EXPECT_TRUE(sets.is_subset_of(truth)) << "seed " << seed << " round " << round;
    }
  }
}

TEST(SafeSets, ClosureDetectsDanglingAction) {
  const MdpInstance inst = two_by_two();
  SafeSets sets = true_safe_sets(inst);
  ASSERT_TRUE(check_closure(sets, inst));
  sets.states[1][1] = 0;
  sets.actions[1][1].clear();
  EXPECT_FALSE(check_closure(sets, inst));
  EXPECT_THROW(build_subsubgraph_index(sets, inst), ConsistencyError);
}

TEST(Subsubgraph, MatchesBreadthFirstSearch) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GeneratorConfig cfg;
    cfg.seed = seed;
    const MdpInstance inst = gen_random(cfg);
    const TrueSafeSets truth = true_safe_sets(inst);
    const SubsubgraphIndex index = build_subsubgraph_index(truth, inst);
    for (int h = 0; h < inst.H; ++h) {
      for (int s = 0; s < inst.num_states(h); ++s) {
        const auto& got = index.reach(h, s);
        const std::set<Triplet> want = truth.contains_state(h, s) ? bfs_reach(truth, inst, h, s) : std::set<Triplet>{};
        EXPECT_EQ(std::set<Triplet>(got.begin(), got.end()), want) << "h " << h << " s " << s;
        EXPECT_TRUE(std::is_sorted(got.begin(), got.end()));
      }
    }
  }
}

TEST(PolicySafety, MatchesPathEnumeration) {
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GeneratorConfig cfg;
    cfg.seed = seed;
    const MdpInstance inst = gen_random(cfg);
    EXPECT_TRUE(is_policy_safe_subgraph(inst, Policy::seed_policy(inst)));
    int safe_count = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const Policy p = random_policy(inst, rng);
      const bool want = paths_safe(inst, p, 0, inst.s1);
      EXPECT_EQ(is_policy_safe_subgraph(inst, p), want);
      safe_count += want;
    }
    // The optimal safe policy is always safe.
    EXPECT_TRUE(is_policy_safe_subgraph(inst, optimal_safe_policy(inst).policy));
    (void)safe_count;
  }
}

TEST(PolicySafety, UndefinedOnReachableStateRaises) {
  const MdpInstance inst = two_by_two();
  Policy p = Policy::seed_policy(inst);
  p.actions[0][0] = 1;
  EXPECT_THROW(reachable_states(inst, p), ContractViolation);
}

TEST(PolicySafety, LowerBoundUnsafeAction) {
  const MdpInstance inst = gen_lower_bound_instance(1, 0.45, 0.1, 0.05, 3);
  Policy p = Policy::seed_policy(inst);
  for (int h = 1; h < inst.H; ++h) {
    for (int s = 0; s < inst.num_states(h); ++s) p.actions[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)] = 0;
  }
  EXPECT_TRUE(is_policy_safe_subgraph(inst, p));
  p.actions[0][0] = 1;
  EXPECT_FALSE(is_policy_safe_subgraph(inst, p));
  p.actions[0][0] = 3;
  EXPECT_FALSE(is_policy_safe_subgraph(inst, p));
  p.actions[0][0] = 2;
  EXPECT_TRUE(is_policy_safe_subgraph(inst, p));
}

TEST(Corridor, EntryExcludedEvenWhenCostsAreKnown) {
  const CorridorInstance c = gen_corridor_instance(0.0);
  const MdpInstance& inst = c.inst;
  SafetyEstimator est(inst, inst.d, 0.05);
  for (int rep = 0; rep < 2000; ++rep) {
    for (int h = 0; h < inst.H; ++h) {
      for (int s = 0; s < inst.num_states(h); ++s) {
        for (int a = 0; a < inst.n_actions; ++a) {
          for (int sn : inst.pair(h, s, a).support) est.ingest(h, inst.feature(h, s, a, sn), true_cost(inst, h, s, a, sn));
        }
      }
    }
  }
  const SafeSets sets = build_safe_sets(est, inst);
  // Every cost on the way to the trap is below c_bar ...
  for (int sn : inst.pair(c.entry_layer, c.entry_state, c.entry_action).support) {
    EXPECT_LT(true_cost(inst, c.entry_layer, c.entry_state, c.entry_action, sn), inst.c_bar);
  }
  // ... yet the entry is excluded, as is the trap.
  EXPECT_FALSE(sets.contains_action(c.entry_layer, c.entry_state, c.entry_action));
  EXPECT_FALSE(sets.contains_state(c.trap_layer, c.trap_state));
  EXPECT_EQ(sets, static_cast<const SafeSets&>(true_safe_sets(inst)));
}

}  // namespace
