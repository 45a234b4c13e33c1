#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "safe_lsvi/assumptions.hpp"
#include "safe_lsvi/errors.hpp"
#include "safe_lsvi/generators.hpp"
#include "safe_lsvi/instance_io.hpp"
#include "safe_lsvi/mdp.hpp"
#include "safe_lsvi/oracle.hpp"
#include "test_support.hpp"

namespace {

using namespace safe_lsvi;

TEST(Step, DeterministicSupport) {
  const MdpInstance inst = test_support::chain_instance(4, 0.5, 0.1);
  std::mt19937_64 rng(1);
  for (int h = 0; h < inst.H; ++h) {
    const auto out = step(inst, h, 0, 0, rng);
    EXPECT_EQ(out.s_next, 0);
    EXPECT_DOUBLE_EQ(out.reward, 0.5);
  }
}

TEST(Step, NoiselessObservationIsExactCost) {
  GeneratorConfig cfg;
  cfg.sigma = 0.0;
  cfg.seed = 3;
  const MdpInstance inst = gen_random(cfg);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const int h = i % inst.H;
    const int s = static_cast<int>(rng() % static_cast<unsigned>(inst.num_states(h)));
    const int a = static_cast<int>(rng() % static_cast<unsigned>(inst.n_actions));
    const auto out = step(inst, h, s, a, rng);
    EXPECT_EQ(out.obs.value, true_cost(inst, h, s, a, out.s_next));
    EXPECT_EQ(out.obs.triplet, (Triplet{h, s, a, out.s_next}));
  }
}

TEST(Step, FrequenciesMatchProbabilities) {
  // A pair with three next states: empirical frequencies within 3 binomial
  // standard deviations of <mu*, phi>.
  // Action 0 is the deterministic seed; action 1 is the one sampled.
  test_support::TabularBuilder b(3, {1, 3}, 2);
  b.set(0, 0, 1, {{0, 0.2}, {1, 0.3}, {2, 0.5}}, 0.1, 0.5);
  const MdpInstance inst = b.build();
  std::mt19937_64 rng(99);
  const int n = 100000;
  std::map<int, int> counts;
  for (int i = 0; i < n; ++i) ++counts[step(inst, 0, 0, 1, rng).s_next];
  for (int sn = 0; sn < 3; ++sn) {
    const double p = inst.transition_prob(0, 0, 1, sn);
    const double sd = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(counts[sn] / static_cast<double>(n), p, 3 * sd) << "s' = " << sn;
  }
}

TEST(Step, RejectsBadState) {
  const MdpInstance inst = test_support::chain_instance(2, 0.5, 0.1);
  std::mt19937_64 rng(1);
  EXPECT_THROW(step(inst, 0, 3, 0, rng), ContractViolation);
  EXPECT_THROW(step(inst, 0, 0, 7, rng), ContractViolation);
}

TEST(TrueCost, SeedAndDotProduct) {
  GeneratorConfig cfg;
  cfg.seed = 11;
  const MdpInstance inst = gen_random(cfg);
  for (int h = 0; h < inst.H; ++h) {
    EXPECT_NEAR(true_cost(inst, inst.seed_triplet(h)), inst.seed_cost(h), 1e-12);
  }
  for (int h = 0; h < inst.H; ++h) {
    for (int s = 0; s < inst.num_states(h); ++s) {
      for (int a = 0; a < inst.n_actions; ++a) {
        for (int sn : inst.pair(h, s, a).support) {
          const Vec& phi = inst.pair(h, s, a).phi[static_cast<std::size_t>(sn)];
          double dot = 0.0;
          for (int i = 0; i < inst.d; ++i) dot += inst.gamma_star[static_cast<std::size_t>(h)][i] * phi[i];
          EXPECT_NEAR(true_cost(inst, h, s, a, sn), dot, 1e-14);
        }
      }
    }
  }
}

TEST(TrueCost, ZeroParameterAndOffSupport) {
  MdpInstance inst = test_support::chain_instance(2, 0.5, 0.0);
  EXPECT_EQ(true_cost(inst, 0, 0, 0, 0), 0.0);
  test_support::TabularBuilder b(2, {1, 2}, 1);
  b.set(0, 0, 0, {{0, 1.0}}, 0.1, 0.5);
  const MdpInstance two = b.build();
  EXPECT_THROW(true_cost(two, 0, 0, 0, 1), ContractViolation);
}

TEST(Generator, InvariantsHoldAcrossSeeds) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    GeneratorConfig cfg;
    cfg.seed = seed;
    const MdpInstance inst = gen_random(cfg);
    EXPECT_NO_THROW(inst.validate());
    EXPECT_GT(safety_margin(inst), 0.0);
    for (int h = 0; h < inst.H; ++h) {
      for (int s = 0; s < inst.num_states(h); ++s) {
        for (int a = 0; a < inst.n_actions; ++a) {
          double total = 0.0;
          for (int sn = 0; sn < inst.num_states(h + 1); ++sn) {
            const double p = inst.transition_prob(h, s, a, sn);
            if (inst.in_support(h, s, a, sn)) {
              EXPECT_GT(p, 0.0);
            } else {
              EXPECT_NEAR(p, 0.0, 1e-12);
            }
            total += p;
          }
          EXPECT_NEAR(total, 1.0, 1e-10);
        }
      }
    }
    // One hazard per layer 1..H-1 at the default fraction.
    const TrueSafeSets truth = true_safe_sets(inst);
    for (int h = 1; h < inst.H; ++h) EXPECT_LT(truth.count_states(h), inst.num_states(h)) << "seed " << seed;
  }
}

TEST(Generator, NoHazardsMeansEverythingReachableIsSafe) {
  GeneratorConfig cfg;
  cfg.unsafe_fraction = 0.0;
  cfg.risky_action_prob = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    cfg.seed = seed;
    const MdpInstance inst = gen_random(cfg);
    const TrueSafeSets truth = true_safe_sets(inst);
    for (int h = 0; h < inst.H; ++h) EXPECT_EQ(truth.count_states(h), inst.num_states(h));
  }
}

TEST(Generator, SmallInstanceHasSafeStatesEverywhere) {
  GeneratorConfig cfg;
  cfg.d = 4;
  cfg.H = 3;
  cfg.states_per_step = 5;
  cfg.n_actions = 3;
  cfg.seed = 42;
  const MdpInstance inst = gen_random(cfg);
  const TrueSafeSets truth = true_safe_sets(inst);
  for (int h = 0; h < inst.H; ++h) EXPECT_GT(truth.count_states(h), 0);
}

TEST(Generator, ImpossibleConfigsRaise) {
  GeneratorConfig cfg;
  cfg.c_bar = 0.99;
  EXPECT_THROW(gen_random(cfg), ConfigError);
  cfg = GeneratorConfig{};
  cfg.d = 1;
  EXPECT_THROW(gen_random(cfg), ConfigError);
  cfg = GeneratorConfig{};
  cfg.max_retries = 0;
  EXPECT_THROW(gen_random(cfg), GenerationError);
}

TEST(LowerBoundFamily, CostAndRewardTables) {
  const double c_bar = 0.45, c10 = 0.1, dphi = 0.05;
  for (int variant : {1, 2}) {
    const MdpInstance inst = gen_lower_bound_instance(variant, c_bar, c10, dphi, 3);
    const double high = 2 * c_bar - c10;
    const double expect_cost[5] = {c10, high, c10, variant == 1 ? high - dphi : c10 + dphi, high};
    const double expect_reward[5] = {1.0 / 8, 1.0, 0.0, 0.5, 0.5};
    for (int a = 0; a < 5; ++a) {
      EXPECT_NEAR(true_cost(inst, 0, inst.s1, a, a), expect_cost[a], 1e-12) << "a(" << a + 1 << ")";
      EXPECT_DOUBLE_EQ(inst.pair(0, inst.s1, a).reward, expect_reward[a]);
    }
    const TrueSafeSets truth = true_safe_sets(inst);
    EXPECT_TRUE(truth.contains_action(0, inst.s1, 0));
    EXPECT_FALSE(truth.contains_action(0, inst.s1, 1));
    EXPECT_TRUE(truth.contains_action(0, inst.s1, 2));
    EXPECT_EQ(truth.contains_action(0, inst.s1, 3), variant == 2);
    EXPECT_FALSE(truth.contains_action(0, inst.s1, 4));
  }
}

TEST(LowerBoundFamily, BadMarginsRaise) {
  EXPECT_THROW(gen_lower_bound_instance(1, 0.1, 0.2, 0.05, 3), ConfigError);
  EXPECT_THROW(gen_lower_bound_instance(1, 0.45, 0.1, 0.4, 3), ConfigError);
  EXPECT_THROW(gen_lower_bound_instance(3, 0.45, 0.1, 0.05, 3), ConfigError);
}

TEST(Assumptions, IdenticalSupportFeaturesGiveZeroSpread) {
  const MdpInstance inst = test_support::chain_instance(3, 0.5, 0.1);
  EXPECT_EQ(delta_phi_c(inst), 0.0);
}

TEST(Assumptions, SingleActionGivesZeroDelta) {
  const MdpInstance inst = test_support::chain_instance(3, 0.5, 0.1);
  const InstanceDiagnostics d = check_assumptions(inst);
  EXPECT_EQ(d.delta, 0.0);
  EXPECT_FALSE(d.delta_clamped);
}

TEST(Assumptions, SpreadMatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    GeneratorConfig cfg;
    cfg.seed = seed;
    const MdpInstance inst = gen_random(cfg);
    double spread = 0.0;
    for (int h = 0; h < inst.H; ++h) {
      for (int s = 0; s < inst.num_states(h); ++s) {
        for (int a = 0; a < inst.n_actions; ++a) {
          for (int x : inst.pair(h, s, a).support) {
            for (int y : inst.pair(h, s, a).support) {
              spread = std::max(spread, (inst.feature(h, s, a, x) - inst.feature(h, s, a, y)).norm());
            }
          }
        }
      }
    }
    EXPECT_NEAR(delta_phi_c(inst), inst.bounds.L * spread, 1e-14);
  }
}

TEST(Assumptions, DeltaMatchesIndependentDoubleLoop) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    GeneratorConfig cfg;
    cfg.seed = seed;
    cfg.states_per_step = 4;
    const MdpInstance inst = gen_random(cfg);
    bool undefined = false;
    EXPECT_NEAR(lipschitz_delta(inst, &undefined), test_support::brute_force_delta(inst), 1e-12) << "seed " << seed;
    EXPECT_FALSE(undefined);
  }
}

TEST(InstanceIo, RoundTripIsByteIdentical) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    GeneratorConfig cfg;
    cfg.seed = seed;
    const MdpInstance inst = gen_random(cfg);
    const std::string first = instance_to_json(inst);
    const MdpInstance back = instance_from_json(first);
    EXPECT_EQ(instance_to_json(back), first);
    EXPECT_EQ(back.seed.triplets, inst.seed.triplets);
    EXPECT_EQ(back.bounds.D, inst.bounds.D);
  }
  const MdpInstance lb = gen_lower_bound_instance(2, 0.45, 0.1, 0.05, 3);
  EXPECT_EQ(instance_to_json(instance_from_json(instance_to_json(lb))), instance_to_json(lb));
}

TEST(InstanceIo, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "safe_lsvi_io_roundtrip.json";
  const MdpInstance inst = gen_corridor_instance(0.05).inst;
  write_instance(inst, path);
  EXPECT_EQ(instance_to_json(read_instance(path)), instance_to_json(inst));
  std::filesystem::remove(path);
}

TEST(InstanceIo, MalformedDocumentsRaise) {
  EXPECT_THROW(instance_from_json("{"), ConfigError);
  EXPECT_THROW(instance_from_json("{\"d\": 2}"), ConfigError);
  EXPECT_THROW(read_instance("/nonexistent/instance.json"), ConfigError);
  // Structurally fine but probabilities no longer sum to one.
  std::string text = instance_to_json(test_support::chain_instance(2, 0.5, 0.1));
  const auto pos = text.find("\"mu_star\"");
  ASSERT_NE(pos, std::string::npos);
  const auto digit = text.find_first_of("123456789", pos);
  text[digit] = text[digit] == '9' ? '8' : '9';
  EXPECT_THROW(instance_from_json(text), ContractViolation);
}

TEST(InstanceIo, RealFormatting) {
  EXPECT_EQ(format_real(-0.0), "0");
  EXPECT_EQ(format_real(0.1), "0.10000000000000001");
  EXPECT_THROW(format_real(std::nan("")), ContractViolation);
}

}  // namespace
