#include "safe_lsvi_cli/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "safe_lsvi/agent.hpp"
#include "safe_lsvi/assumptions.hpp"
#include "safe_lsvi/diagnostics.hpp"
#include "safe_lsvi/errors.hpp"
#include "safe_lsvi/generators.hpp"
#include "safe_lsvi/harness.hpp"
#include "safe_lsvi/instance_io.hpp"
#include "safe_lsvi/oracle.hpp"

namespace safe_lsvi::cli {

namespace {

struct SourceFlags {
  std::string generate;
  std::string instance;
  std::string lower_bound;
  bool corridor = false;
};

struct RunFlags {
  SourceFlags src;
  std::string agent = "lsvi-new";
  std::string tie_break = "smallest-index";
  int episodes = 2000;
  std::string seeds = "0";
  std::optional<int> kprime;
  double p = 0.05;
  std::optional<double> sigma;
  double b_beta = 0.01;
  double lambda0 = AgentOptions{}.lambda0;
  std::optional<double> lambda;
  std::optional<double> beta;
  std::string out;
  bool track_gap = false;
  bool timing = false;
  int threads = 0;
  int every = 0;
};

void add_source_flags(CLI::App* cmd, SourceFlags& f) {
  auto* g = cmd->add_option("--generate", f.generate, "Random instance spec, e.g. d=4,H=4,S=6,A=3[,seed=N,...]");
  auto* i = cmd->add_option("--instance", f.instance, "Instance JSON file");
  auto* l = cmd->add_option("--lower-bound", f.lower_bound, "Lower-bound family, e.g. variant=1[,c_bar=..,c10=..]");
  auto* fig = cmd->add_flag("--corridor", f.corridor, "Five-step corridor instance with one unsafe last-step state");
  g->excludes(i)->excludes(l)->excludes(fig);
  i->excludes(l)->excludes(fig);
  l->excludes(fig);
}

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  add_source_flags(cmd, f.src);
  cmd->add_option("--agent", f.agent, "lsvi-new | seed-only | unconstrained");
  cmd->add_option("--tie-break", f.tie_break, "smallest-index | pre-clamp (ties among saturated Q-values)");
  cmd->add_option("--episodes", f.episodes, "Episodes per run (K)");
  cmd->add_option("--seeds", f.seeds, "Run seeds: 0..9 or 1,2,3");
  cmd->add_option("--kprime", f.kprime, "Pin the initialization length K'");
  cmd->add_option("--p", f.p, "Failure probability");
  cmd->add_option("--sigma", f.sigma, "Override the cost-noise scale");
  cmd->add_option("--b-beta", f.b_beta, "Constant of the second beta branch");
  cmd->add_option("--lambda0", f.lambda0, "Constant in kappa");
  cmd->add_option("--lambda", f.lambda, "Ridge parameter (>= d; default d)");
  cmd->add_option("--beta", f.beta, "Override the confidence radius");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_flag("--track-gap", f.track_gap, "Track the safety-gap slack every episode");
  cmd->add_flag("--timing", f.timing, "Record wall time in the summary");
  cmd->add_option("--threads", f.threads, "Worker threads (0: all cores)");
}

InstanceSource make_source(const SourceFlags& f) {
  if (!f.instance.empty()) {
    InstanceSource s;
    s.kind = InstanceSource::Kind::File;
    s.path = f.instance;
    return s;
  }
  if (!f.lower_bound.empty()) return parse_lower_bound_spec(f.lower_bound);
  if (f.corridor) {
    InstanceSource s;
    s.kind = InstanceSource::Kind::Corridor;
    return s;
  }
  return parse_generator_spec(f.generate.empty() ? "d=4,H=4,S=6,A=3" : f.generate);
}

std::filesystem::path out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SAFE_LSVI_OUT_DIR"); env && *env) return env;
  return "out";
}

ExperimentConfig make_config(const RunFlags& f) {
  ExperimentConfig cfg;
  cfg.source = make_source(f.src);
  cfg.agent = agent_kind_from_string(f.agent);
  cfg.options.K = f.episodes;
  cfg.options.tie_break = tie_break_from_string(f.tie_break);
  cfg.options.K_prime = f.kprime;
  cfg.options.p = f.p;
  cfg.options.b_beta = f.b_beta;
  cfg.options.lambda0 = f.lambda0;
  cfg.options.lambda = f.lambda;
  cfg.options.beta = f.beta;
  cfg.sigma = f.sigma;
  cfg.seeds.clear();
  for (auto s : parse_seed_list(f.seeds)) cfg.seeds.push_back(s);
  cfg.out_dir = out_dir(f.out);
  cfg.track_gap = f.track_gap;
  cfg.timing = f.timing;
  cfg.threads = f.threads;
  return cfg;
}

std::string diagnostics_json(const MdpInstance& inst, const InstanceDiagnostics& d) {
  nlohmann::ordered_json j;
  j["d"] = inst.d;
  j["H"] = inst.H;
  j["states"] = inst.layer_sizes;
  j["actions"] = inst.n_actions;
  j["c_bar"] = inst.c_bar;
  j["sigma"] = inst.sigma;
  j["D"] = inst.bounds.D;
  j["L"] = inst.bounds.L;
  j["delta"] = d.delta;
  j["delta_phi_c"] = d.delta_phi_c;
  j["delta_c"] = d.delta_c;
  j["star_convex_ok"] = d.star_convex_ok;
  j["true_safe_fraction"] = d.true_safe_fraction;
  j["flags"] = d.flags;
  const auto opt = optimal_safe_policy(inst);
  j["v_star"] = opt.v_star;
  j["seed_value"] = evaluate_policy(inst, Policy::seed_policy(inst));
  return j.dump(2) + "\n";
}

int cmd_run(const RunFlags& f, std::ostream& out) {
  const ExperimentConfig cfg = make_config(f);
  const ExperimentResult res = run_experiment(cfg);
  write_outputs(res);
  out << "wrote " << (cfg.out_dir / "metrics.csv").string() << " and " << (cfg.out_dir / "summary.json").string()
      << "\n";
  return kExitOk;
}

int cmd_generate(const SourceFlags& src, unsigned long long seed, const std::string& path, std::ostream& out) {
  const MdpInstance inst = materialize(make_source(src), seed);
  if (path.empty() || path == "-") {
    out << instance_to_json(inst);
  } else {
    write_instance(inst, path);
    out << "wrote " << path << "\n";
  }
  return kExitOk;
}

int cmd_check(const std::string& path, std::ostream& out) {
  const MdpInstance inst = read_instance(path);
  out << diagnostics_json(inst, check_assumptions(inst));
  return kExitOk;
}

int cmd_diagnose(const RunFlags& f, std::ostream& out) {
  ExperimentConfig cfg = make_config(f);
  const auto seed = cfg.seeds.front();
  const MdpInstance inst = materialize(cfg.source, seed, cfg.sigma);
  const InstanceDiagnostics diag = check_assumptions(inst);
  const AgentConfig acfg = make_agent_config(inst, diag, cfg.options);
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream csv(cfg.out_dir / "safety_gap.csv", std::ios::binary);
  if (!csv) throw ConfigError("cannot write " + (cfg.out_dir / "safety_gap.csv").string());
  csv << "episode,h,s,a,s_prime,true_gap,est_gap,slack\n";
  const int every = f.every > 0 ? f.every : std::max(1, acfg.K / 10);
  double min_slack = std::numeric_limits<double>::infinity();
  const EpisodeObserver observer = [&](const EpisodeView& v) {
    if (v.log->init_phase) return;
    const SafetyGapReport rep = lemma6_check(inst, v.agent->estimator(), v.agent->safe_sets(), v.k);
    if (!rep.entries.empty()) min_slack = std::min(min_slack, rep.min_slack());
    if (v.k % every != 0 && v.k != acfg.K) return;
    std::ostringstream rows;
    write_gap_csv(rep, rows, false);
    std::istringstream lines(rows.str());
    for (std::string line; std::getline(lines, line);) csv << v.k << ',' << line << '\n';
  };
  std::mt19937_64 rng(seed);
  run_agent(inst, acfg, cfg.agent, rng, observer);
  std::ofstream(cfg.out_dir / "diagnostics.json", std::ios::binary) << diagnostics_json(inst, diag);
  out << "min slack " << min_slack << "; wrote " << (cfg.out_dir / "safety_gap.csv").string() << "\n";
  return kExitOk;
}

}  // namespace

std::vector<unsigned long long> parse_seed_list(const std::string& text) {
  std::vector<unsigned long long> out;
  const auto dots = text.find("..");
  try {
    if (dots != std::string::npos) {
      const unsigned long long lo = std::stoull(text.substr(0, dots));
      const unsigned long long hi = std::stoull(text.substr(dots + 2));
      if (hi < lo) throw ConfigError("empty seed range '" + text + "'");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoull(item));
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("bad seed list '" + text + "'");
  }
  if (out.empty()) throw ConfigError("empty seed list");
  return out;
}

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Safe optimistic value iteration: experiments, instances and diagnostics"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Run seeded experiments and write metrics.csv and summary.json");
  add_run_flags(run, run_flags);

  SourceFlags gen_flags;
  unsigned long long gen_seed = 0;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "Write an instance as JSON");
  add_source_flags(gen, gen_flags);
  gen->add_option("--seed", gen_seed, "Instance seed when the generator string has no seed= key");
  gen->add_option("--out", gen_out, "Output file ('-' for stdout)");

  std::string check_path;
  auto* check = app.add_subcommand("check-instance", "Validate an instance file and print its diagnostics");
  check->add_option("file", check_path, "Instance JSON")->required();

  RunFlags diag_flags;
  auto* diag = app.add_subcommand("diagnose", "Single-seed run with per-episode safety-gap tracking");
  add_run_flags(diag, diag_flags);
  diag->add_option("--every", diag_flags.every, "Write the gap table every N episodes");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadConfig;
  }

  try {
    if (run->parsed()) return cmd_run(run_flags, out);
    if (gen->parsed()) return cmd_generate(gen_flags, gen_seed, gen_out, out);
    if (check->parsed()) return cmd_check(check_path, out);
    if (diag->parsed()) return cmd_diagnose(diag_flags, out);
  } catch (const ConsistencyError& e) {
    const std::filesystem::path dir = out_dir(run->parsed() ? run_flags.out : diag_flags.out);
    std::filesystem::create_directories(dir);
    const auto dump = dir / "consistency_error.txt";
    std::ofstream(dump) << e.what() << "\n";
    err << "consistency error: " << e.what() << " (dump: " << dump.string() << ")\n";
    return kExitConsistency;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << " (condition " << e.condition_estimate() << ")\n";
    return kExitConsistency;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const GenerationError& e) {
    err << "generation error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const ContractViolation& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadConfig;
  }
  return kExitBadConfig;
}

}  // namespace safe_lsvi::cli
