#include "safe_lsvi/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "safe_lsvi/diagnostics.hpp"
#include "safe_lsvi/errors.hpp"
#include "safe_lsvi/instance_io.hpp"
#include "safe_lsvi/oracle.hpp"

namespace safe_lsvi {

namespace {

template <class T>
std::size_t ix(T i) {
  return static_cast<std::size_t>(i);
}

std::string g12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::vector<std::pair<std::string, std::string>> split_kv(const std::string& spec) {
  std::vector<std::pair<std::string, std::string>> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + item + "'");
    out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return out;
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad value for " + key + ": '" + v + "'");
  }
}

long long to_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for " + key + ": '" + v + "'");
  }
}

std::uint64_t agent_stream_seed(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5afe1u};
  std::uint32_t raw[2];
  seq.generate(raw, raw + 2);
  return (static_cast<std::uint64_t>(raw[0]) << 32) | raw[1];
}

}  // namespace

std::vector<double> regret_curve(const std::vector<EpisodeLog>& logs, double v_star) {
  std::vector<double> out;
  out.reserve(logs.size());
  double acc = 0.0;
  for (const auto& log : logs) {
    acc += v_star - log.value;
    out.push_back(acc);
  }
  return out;
}

double lower_bound_value(int d, int H, int K, double delta_c) {
  if (d < 1 || H < 1 || K < 1 || !(delta_c > 0.0)) throw ContractViolation("lower_bound_value: arguments must be positive");
  const double minimax = d * H * std::sqrt(static_cast<double>(K)) / (16.0 * std::sqrt(2.0));
  const double safety = (H / 24.0) / (delta_c * delta_c);
  return std::max(minimax, safety);
}

double loglog_slope(const std::vector<double>& curve, int k_lo, int k_hi, int points) {
  const int n = static_cast<int>(curve.size());
  k_lo = std::max(k_lo, 1);
  k_hi = std::min(k_hi, n);
  if (k_hi <= k_lo || points < 2) return std::numeric_limits<double>::quiet_NaN();
  std::vector<int> ks;
  for (int i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / (points - 1);
    const int k = static_cast<int>(std::lround(std::exp(std::log(k_lo) + t * (std::log(k_hi) - std::log(k_lo)))));
    if (ks.empty() || ks.back() != k) ks.push_back(k);
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int m = 0;
  for (int k : ks) {
    const double r = curve[ix(k - 1)];
    if (!(r > 0.0)) continue;
    const double x = std::log(static_cast<double>(k));
    const double y = std::log(r);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  const double den = m * sxx - sx * sx;
  if (den <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (m * sxy - sx * sy) / den;
}

double loglog_slope(const std::vector<double>& curve) {
  const int K = static_cast<int>(curve.size());
  return loglog_slope(curve, std::max(1, K / 8), K);
}

InstanceSource parse_generator_spec(const std::string& spec) {
  InstanceSource src;
  src.kind = InstanceSource::Kind::Generator;
  auto& g = src.gen;
  for (const auto& [k, v] : split_kv(spec)) {
    if (k == "d") g.d = static_cast<int>(to_integer(k, v));
    else if (k == "H") g.H = static_cast<int>(to_integer(k, v));
    else if (k == "S") g.states_per_step = static_cast<int>(to_integer(k, v));
    else if (k == "A") g.n_actions = static_cast<int>(to_integer(k, v));
    else if (k == "seed") {
      g.seed = static_cast<std::uint64_t>(to_integer(k, v));
      src.gen_seed_pinned = true;
    } else if (k == "c_bar") g.c_bar = to_real(k, v);
    else if (k == "sigma") g.sigma = to_real(k, v);
    else if (k == "unsafe") g.unsafe_fraction = to_real(k, v);
    else if (k == "support") g.max_support = static_cast<int>(to_integer(k, v));
    else if (k == "scale") g.feature_scale = to_real(k, v);
    else if (k == "nuisance") g.nuisance_scale = to_real(k, v);
    else if (k == "seed_cost") g.seed_cost_max = to_real(k, v);
    else if (k == "seed_reward") g.seed_reward_max = to_real(k, v);
    else if (k == "risky") g.risky_action_prob = to_real(k, v);
    else if (k == "prob_jitter") g.prob_jitter = to_real(k, v);
    else if (k == "cost_jitter") g.cost_jitter = to_real(k, v);
    else throw ConfigError("unknown generator key '" + k + "'");
  }
  return src;
}

InstanceSource parse_lower_bound_spec(const std::string& spec) {
  InstanceSource src;
  src.kind = InstanceSource::Kind::LowerBound;
  for (const auto& [k, v] : split_kv(spec)) {
    if (k == "variant") src.lb_variant = static_cast<int>(to_integer(k, v));
    else if (k == "c_bar") src.lb_c_bar = to_real(k, v);
    else if (k == "c10") src.lb_c10 = to_real(k, v);
    else if (k == "delta_phi_c") src.lb_delta_phi_c = to_real(k, v);
    else if (k == "H") src.lb_H = static_cast<int>(to_integer(k, v));
    else throw ConfigError("unknown lower-bound key '" + k + "'");
  }
  if (src.lb_variant != 1 && src.lb_variant != 2) throw ConfigError("lower-bound variant must be 1 or 2");
  return src;
}

MdpInstance materialize(const InstanceSource& src, std::uint64_t run_seed, std::optional<double> sigma_override) {
  MdpInstance inst;
  switch (src.kind) {
    case InstanceSource::Kind::File:
      inst = read_instance(src.path);
      break;
    case InstanceSource::Kind::Generator: {
      GeneratorConfig g = src.gen;
      if (!src.gen_seed_pinned) g.seed = run_seed;
      if (sigma_override) g.sigma = *sigma_override;
      return gen_random(g);
    }
    case InstanceSource::Kind::LowerBound:
      inst = gen_lower_bound_instance(src.lb_variant, src.lb_c_bar, src.lb_c10, src.lb_delta_phi_c, src.lb_H, 0.05);
      break;
    case InstanceSource::Kind::Corridor:
      inst = gen_corridor_instance(0.05).inst;
      break;
  }
  if (sigma_override) {
    if (!(*sigma_override >= 0.0)) throw ConfigError("sigma must be non-negative");
    inst.sigma = *sigma_override;
  }
  return inst;
}

RunResult run_single(const ExperimentConfig& cfg, std::uint64_t seed) {
  const MdpInstance inst = materialize(cfg.source, seed, cfg.sigma);
  return run_single(inst, cfg, seed);
}

RunResult run_single(const MdpInstance& inst, const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult r;
  r.seed = seed;
  r.diagnostics = check_assumptions(inst);

  AgentOptions opt = cfg.options;
  if (cfg.agent != AgentKind::LsviNew) {
    // Baselines never use the safety bonuses; report the rest of the settings.
    opt.safety_bonuses = false;
  }
  r.config = make_agent_config(inst, r.diagnostics, opt);
  if (cfg.agent == AgentKind::Unconstrained) r.config.K_prime = 0;

  const TrueSafeSets truth = true_safe_sets(inst);
  const OptimalSafePolicy opt_pol = optimal_safe_policy(inst, truth);
  r.v_star = opt_pol.v_star;
  r.seed_value = evaluate_policy(inst, Policy::seed_policy(inst));
  for (int a = 0; a < inst.n_actions; ++a) {
    if (!truth.contains_action(0, inst.s1, a)) r.unsafe_actions_s1.push_back(a);
  }

  r.min_gap_slack = std::numeric_limits<double>::infinity();
  const EpisodeObserver observer = [&](const EpisodeView& view) {
    const Agent& agent = *view.agent;
    if (agent.kind() != AgentKind::LsviNew) return;
    if (!agent.safe_sets().is_subset_of(truth)) r.sound_every_episode = false;
    if (!contains_seed(agent.safe_sets(), inst)) r.seed_every_episode = false;
    if (cfg.track_gap && !view.log->init_phase) {
      const SafetyGapReport rep = lemma6_check(inst, agent.estimator(), agent.safe_sets(), view.k);
      if (!rep.entries.empty()) r.min_gap_slack = std::min(r.min_gap_slack, rep.min_slack());
    }
  };

  std::mt19937_64 rng(agent_stream_seed(seed));
  r.logs = run_agent(inst, r.config, cfg.agent, rng, observer);
  r.regret = regret_curve(r.logs, r.v_star);
  double gap = 0.0;
  int planned = 0;
  for (const auto& log : r.logs) {
    r.violations += log.violations;
    if (log.violations > 0) ++r.violating_episodes;
    if (!std::isnan(log.v_hat)) {
      gap += log.v_hat - log.value;
      ++planned;
    }
  }
  r.mean_optimism_gap = planned > 0 ? gap / planned : 0.0;
  r.slope = loglog_slope(r.regret);
  r.lower_bound = r.diagnostics.delta_c > 0.0 ? lower_bound_value(inst.d, inst.H, r.config.K, r.diagnostics.delta_c)
                                              : std::numeric_limits<double>::infinity();
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.seeds.empty()) throw ConfigError("need at least one seed");
  if (cfg.options.K < 1) throw ConfigError("episodes must be at least 1");
  if (!(cfg.options.p > 0.0 && cfg.options.p < 1.0)) throw ConfigError("p must lie in (0,1)");

  ExperimentResult out;
  out.config = cfg;
  const std::size_t n = cfg.seeds.size();
  out.runs.resize(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out.runs[i] = run_single(cfg, cfg.seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const std::size_t K = ix(cfg.options.K);
  out.mean_regret.assign(K, 0.0);
  for (const auto& run : out.runs) {
    for (std::size_t k = 0; k < K && k < run.regret.size(); ++k) out.mean_regret[k] += run.regret[k] / static_cast<double>(n);
  }
  out.mean_slope = loglog_slope(out.mean_regret);
  return out;
}

void write_metrics_csv(const ExperimentResult& result, std::ostream& out) {
  out << "seed,episode,episode_value,cumulative_regret,cumulative_violations,safe_set_sizes\n";
  for (const auto& run : result.runs) {
    long cum_viol = 0;
    for (std::size_t i = 0; i < run.logs.size(); ++i) {
      const auto& log = run.logs[i];
      cum_viol += log.violations;
      out << run.seed << ',' << log.k << ',' << g12(log.value) << ',' << g12(run.regret[i]) << ',' << cum_viol << ',';
      for (std::size_t h = 0; h < log.safe_set_sizes.size(); ++h) {
        if (h) out << ';';
        out << log.safe_set_sizes[h];
      }
      out << '\n';
    }
  }
}

std::string summary_json(const ExperimentResult& result) {
  using nlohmann::ordered_json;
  const auto real = [](double x) -> ordered_json {
    if (!std::isfinite(x)) return nullptr;
    return x;
  };
  const ExperimentConfig& cfg = result.config;
  ordered_json j;
  j["agent"] = to_string(cfg.agent);
  j["episodes"] = cfg.options.K;
  j["seeds"] = cfg.seeds;
  j["p"] = cfg.options.p;
  j["b_beta"] = cfg.options.b_beta;
  j["lambda0"] = cfg.options.lambda0;
  j["tie_break"] = to_string(cfg.options.tie_break);
  ordered_json runs = ordered_json::array();
  int with_violation = 0;
  double regret_sum = 0.0;
  for (const auto& r : result.runs) {
    ordered_json x;
    x["seed"] = r.seed;
    x["v_star"] = real(r.v_star);
    x["seed_value"] = real(r.seed_value);
    x["final_regret"] = real(r.regret.empty() ? 0.0 : r.regret.back());
    x["violations"] = r.violations;
    x["violating_episodes"] = r.violating_episodes;
    x["slope"] = real(r.slope);
    x["lower_bound"] = real(r.lower_bound);
    x["beta"] = real(r.config.beta);
    x["lambda"] = real(r.config.lambda);
    x["K_prime"] = r.config.K_prime;
    x["K_prime_formula"] = r.config.K_prime_formula;
    x["kappa"] = real(r.config.kappa);
    x["delta_tilde"] = real(r.config.delta_tilde);
    x["eps1"] = real(r.config.eps1);
    x["eps2"] = r.config.eps2;
    x["eps3"] = r.config.eps3;
    x["eps4"] = real(r.config.eps4);
    x["delta"] = real(r.diagnostics.delta);
    x["delta_phi_c"] = real(r.diagnostics.delta_phi_c);
    x["delta_c"] = real(r.diagnostics.delta_c);
    x["star_convex_ok"] = r.diagnostics.star_convex_ok;
    x["flags"] = r.diagnostics.flags;
    x["unsafe_actions_s1"] = r.unsafe_actions_s1;
    x["sound_every_episode"] = r.sound_every_episode;
    x["seed_every_episode"] = r.seed_every_episode;
    x["mean_optimism_gap"] = real(r.mean_optimism_gap);
    x["gap_min_slack"] = cfg.track_gap ? real(r.min_gap_slack) : ordered_json(nullptr);
    if (cfg.timing) x["wall_seconds"] = r.wall_seconds;
    runs.push_back(std::move(x));
    if (r.violations > 0) ++with_violation;
    regret_sum += r.regret.empty() ? 0.0 : r.regret.back();
  }
  j["runs"] = std::move(runs);
  const double n = static_cast<double>(result.runs.size());
  ordered_json agg;
  agg["runs"] = result.runs.size();
  agg["runs_with_violations"] = with_violation;
  agg["violation_rate"] = n > 0 ? with_violation / n : 0.0;
  agg["mean_final_regret"] = n > 0 ? regret_sum / n : 0.0;
  agg["mean_curve_slope"] = real(result.mean_slope);
  j["aggregate"] = std::move(agg);
  return j.dump(2) + "\n";
}

void write_outputs(const ExperimentResult& result) {
  const auto& dir = result.config.out_dir;
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "metrics.csv", std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (dir / "metrics.csv").string());
    write_metrics_csv(result, f);
  }
  std::ofstream f(dir / "summary.json", std::ios::binary);
  if (!f) throw ConfigError("cannot write " + (dir / "summary.json").string());
  f << summary_json(result);
}

}  // namespace safe_lsvi
