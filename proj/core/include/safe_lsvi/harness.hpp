#pragma once

// Experiment orchestration: instance sources, seeded runs (in parallel,
// merged in seed order), regret bookkeeping and the metrics/summary outputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "safe_lsvi/agent.hpp"
#include "safe_lsvi/assumptions.hpp"
#include "safe_lsvi/generators.hpp"
#include "safe_lsvi/mdp.hpp"

namespace safe_lsvi {

/// r_k = sum_{j <= k} (v_star - value_j).
std::vector<double> regret_curve(const std::vector<EpisodeLog>& logs, double v_star);

/// max{ d H sqrt(K) / (16 sqrt 2), (H / 24) / delta_c^2 }.
double lower_bound_value(int d, int H, int K, double delta_c);

/// Least-squares slope of log r_k against log k over `points` log-spaced
/// episodes in [k_lo, k_hi] (1-based, clipped to the curve). Episodes with
/// r_k <= 0 are skipped; NaN when fewer than two remain.
double loglog_slope(const std::vector<double>& curve, int k_lo, int k_hi, int points = 64);

/// Default fit window [max(1, K/8), K].
double loglog_slope(const std::vector<double>& curve);

struct InstanceSource {
  enum class Kind { File, Generator, LowerBound, Corridor };
  Kind kind = Kind::Generator;
  std::filesystem::path path;
  GeneratorConfig gen;
  bool gen_seed_pinned = false;  // otherwise the run seed picks the instance
  int lb_variant = 1;
  double lb_c_bar = 0.45;
  double lb_c10 = 0.1;
  double lb_delta_phi_c = 0.05;
  int lb_H = 3;
};

/// "d=4,H=4,S=6,A=3[,seed=N,c_bar=..,...]" onto the defaults. Keys:
/// d, H, S, A, seed, c_bar, sigma, unsafe, support, scale, nuisance,
/// seed_cost, seed_reward, risky, prob_jitter, cost_jitter.
/// Throws ConfigError for unknown keys or bad values.
InstanceSource parse_generator_spec(const std::string& spec);

/// "variant=1[,c_bar=..,c10=..,delta_phi_c=..,H=..]".
InstanceSource parse_lower_bound_spec(const std::string& spec);

/// Builds the instance a run with `run_seed` plays on.
MdpInstance materialize(const InstanceSource& src, std::uint64_t run_seed, std::optional<double> sigma_override = {});

struct ExperimentConfig {
  InstanceSource source;
  AgentKind agent = AgentKind::LsviNew;
  AgentOptions options;  // options.K is the episode count
  std::optional<double> sigma;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path out_dir = "out";
  bool track_gap = false;  // per-episode slack tracking
  bool timing = false;  // wall time in the summary (never in the CSV)
  int threads = 0;      // 0: hardware concurrency
};

struct RunResult {
  std::uint64_t seed = 0;
  AgentConfig config;
  InstanceDiagnostics diagnostics;
  double v_star = 0.0;
  double seed_value = 0.0;
  std::vector<int> unsafe_actions_s1;  // 0-based actions at s1 outside the true safe set
  std::vector<EpisodeLog> logs;
  std::vector<double> regret;
  long violations = 0;
  int violating_episodes = 0;
  bool sound_every_episode = true;   // estimated safe sets inside the true ones
  bool seed_every_episode = true;    // seed chain inside the estimated sets
  double min_gap_slack = 0.0;     // +inf when not tracked
  double mean_optimism_gap = 0.0;    // mean of v_hat - value over planned episodes
  double slope = 0.0;
  double lower_bound = 0.0;
  double wall_seconds = 0.0;
};

RunResult run_single(const ExperimentConfig& cfg, std::uint64_t seed);
RunResult run_single(const MdpInstance& inst, const ExperimentConfig& cfg, std::uint64_t seed);

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RunResult> runs;  // in seed order
  std::vector<double> mean_regret;
  double mean_slope = 0.0;
};

/// Runs every seed (concurrently when threads allow); rethrows the first
/// failure in seed order.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Columns: seed,episode,episode_value,cumulative_regret,cumulative_violations,safe_set_sizes
/// (sizes joined by ';'); reals with 12 significant digits.
void write_metrics_csv(const ExperimentResult& result, std::ostream& out);
std::string summary_json(const ExperimentResult& result);

/// Writes metrics.csv and summary.json into cfg.out_dir.
void write_outputs(const ExperimentResult& result);

}  // namespace safe_lsvi
