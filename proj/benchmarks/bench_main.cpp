#include <benchmark/benchmark.h>

#include <random>

#include "safe_lsvi/agent.hpp"
#include "safe_lsvi/assumptions.hpp"
#include "safe_lsvi/generators.hpp"
#include "safe_lsvi/linalg.hpp"
#include "safe_lsvi/safe_sets.hpp"

namespace {

using namespace safe_lsvi;

Vec random_vec(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = n01(rng);
  return v;
}

void BM_ConfNorm(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  auto inc = linalg::IncrementalInverse::scaled_identity(d, d);
  for (int i = 0; i < 4 * d; ++i) inc.rank_one_update(random_vec(d, rng));
  const Vec x = random_vec(d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::conf_norm(inc.matrix(), x));
}
BENCHMARK(BM_ConfNorm)->Arg(4)->Arg(16)->Arg(64);

void BM_ConfNormCachedInverse(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  auto inc = linalg::IncrementalInverse::scaled_identity(d, d);
  for (int i = 0; i < 4 * d; ++i) inc.rank_one_update(random_vec(d, rng));
  const Vec x = random_vec(d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(inc.conf_norm(x));
}
BENCHMARK(BM_ConfNormCachedInverse)->Arg(4)->Arg(16)->Arg(64);

void BM_RankOneUpdate(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  std::vector<Vec> pool;
  for (int i = 0; i < 64; ++i) pool.push_back(random_vec(d, rng) * 0.1);
  auto inc = linalg::IncrementalInverse::scaled_identity(d, d);
  std::size_t i = 0;
  for (auto _ : state) {
    inc.rank_one_update(pool[i++ % pool.size()]);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_RankOneUpdate)->Arg(4)->Arg(16)->Arg(64);

// Agent warmed for K episodes on the standard suite.
Agent warmed_agent(const MdpInstance& inst, int K) {
  AgentOptions opt;
  opt.K = 2000;
  Agent agent(inst, make_agent_config(inst, check_assumptions(inst), opt));
  std::mt19937_64 rng(3);
  for (int k = 0; k < K; ++k) agent.run_episode(rng);
  return agent;
}

void BM_BuildSafeSets(benchmark::State& state) {
  GeneratorConfig g;
  g.states_per_step = static_cast<int>(state.range(0));
  const MdpInstance inst = gen_random(g);
  const Agent agent = warmed_agent(inst, 400);
  for (auto _ : state) benchmark::DoNotOptimize(build_safe_sets(agent.estimator(), inst));
}
BENCHMARK(BM_BuildSafeSets)->Arg(6)->Arg(12);

void BM_PlanningStep(benchmark::State& state) {
  GeneratorConfig g;
  g.states_per_step = static_cast<int>(state.range(0));
  const MdpInstance inst = gen_random(g);
  Agent agent = warmed_agent(inst, 400);
  for (auto _ : state) {
    agent.plan();
    benchmark::DoNotOptimize(agent.policy());
  }
}
BENCHMARK(BM_PlanningStep)->Arg(6)->Arg(12);

void BM_Episode(benchmark::State& state) {
  const MdpInstance inst = gen_random(GeneratorConfig{});
  Agent agent = warmed_agent(inst, 400);
  std::mt19937_64 rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(agent.run_episode(rng));
}
BENCHMARK(BM_Episode);

}  // namespace

BENCHMARK_MAIN();
