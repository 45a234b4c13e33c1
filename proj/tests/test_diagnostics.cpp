#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "safe_lsvi/agent.hpp"
#include "safe_lsvi/assumptions.hpp"
#include "safe_lsvi/diagnostics.hpp"
#include "safe_lsvi/generators.hpp"
#include "safe_lsvi/oracle.hpp"
#include "test_support.hpp"

namespace {

using namespace safe_lsvi;

TEST(SafetyGap, SingleSupportGivesZeroGaps) {
  const MdpInstance inst = test_support::chain_instance(3, 0.5, 0.1);
  SafetyEstimator est(inst, 2.0, 1.0);
  const SafeSets sets = true_safe_sets(inst);
  const SafetyGapReport rep = lemma6_check(inst, est, sets, 1);
  ASSERT_EQ(rep.entries.size(), 3u);
  for (const auto& e : rep.entries) {
    EXPECT_EQ(e.true_gap, 0.0);
    EXPECT_EQ(e.est_gap, 0.0);
    EXPECT_GE(e.slack, 0.0);
  }
  EXPECT_TRUE(rep.all_finite());
}

TEST(SafetyGap, ByHandOnTwoPointSupport) {
  // Costs 0.1 and 0.3 on the two next states; fresh estimator, lambda 2.
  test_support::TabularBuilder b(2, {1, 2}, 2);
  b.set(0, 0, 0, {{0, 1.0}}, 0.1, 0.0);
  b.set_costs(0, 0, 1, {{0, 0.5}, {1, 0.5}}, {{0, 0.1}, {1, 0.3}}, 0.5);
  const MdpInstance inst = b.build();
  SafetyEstimator est(inst, 2.0, 0.5);
  SafeSets sets = SafeSets::empty_like(inst);
  sets.states[0][0] = 1;
  sets.actions[0][0] = {1};
  const SafetyGapReport rep = lemma6_check(inst, est, sets, 3);
  ASSERT_EQ(rep.entries.size(), 2u);
  EXPECT_EQ(rep.k, 3);
  const Vec& f0 = inst.feature(0, 0, 1, 0);
  const Vec& f1 = inst.feature(0, 0, 1, 1);
  const double c0 = est.estimate(0, f0).c_tilde, c1 = est.estimate(0, f1).c_tilde;
  const int arg = c1 > c0 ? 1 : 0;
  const double u = est.uncertainty(0, arg == 1 ? f1 : f0);
  EXPECT_NEAR(rep.entries[0].true_gap, 0.2, 1e-12);
  EXPECT_NEAR(rep.entries[1].true_gap, 0.0, 1e-12);
  EXPECT_NEAR(rep.entries[0].est_gap, std::max(c0, c1) - c0, 1e-12);
  EXPECT_NEAR(rep.entries[0].slack, 0.2 + 2 * 0.5 * u - (std::max(c0, c1) - c0), 1e-12);
}

TEST(SafetyGap, NoiselessRunsKeepNonnegativeSlack) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    GeneratorConfig g;
    g.seed = seed;
    g.sigma = 0.0;
    const MdpInstance inst = gen_random(g);
    AgentOptions opt;
    opt.K = 400;
    const AgentConfig cfg = make_agent_config(inst, check_assumptions(inst), opt);
    std::mt19937_64 rng(seed);
    double worst = 1.0;
    run_agent(inst, cfg, AgentKind::LsviNew, rng, [&](const EpisodeView& v) {
      const auto rep = lemma6_check(inst, v.agent->estimator(), v.agent->safe_sets(), v.k);
      EXPECT_TRUE(rep.all_finite());
      if (!rep.entries.empty()) worst = std::min(worst, rep.min_slack());
    });
    EXPECT_GE(worst, -1e-6) << "seed " << seed;
  }
}

TEST(SafetyGap, CsvLayout) {
  SafetyGapReport rep;
  rep.entries.push_back(SafetyGapEntry{Triplet{1, 2, 0, 3}, 0.25, 0.125, 0.5});
  std::ostringstream out;
  write_gap_csv(rep, out);
  EXPECT_EQ(out.str(), "h,s,a,s_prime,true_gap,est_gap,slack\n1,2,0,3,0.25,0.125,0.5\n");
  std::ostringstream bare;
  write_gap_csv(rep, bare, false);
  EXPECT_EQ(bare.str(), "1,2,0,3,0.25,0.125,0.5\n");
  EXPECT_EQ(SafetyGapReport{}.min_slack(), std::numeric_limits<double>::infinity());
}

}  // namespace
