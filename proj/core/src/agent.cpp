#include "safe_lsvi/agent.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "safe_lsvi/errors.hpp"
#include "safe_lsvi/oracle.hpp"

namespace safe_lsvi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class T>
std::size_t ix(T i) {
  return static_cast<std::size_t>(i);
}

[[noreturn]] void margin_error(const std::string& name, int h, double value) {
  std::ostringstream os;
  os << "compute_bonus_params: " << name;
  if (h >= 0) os << " at step " << h;
  os << " is " << value << " (must be positive; the instance is too tight for these parameters)";
  throw ConfigError(os.str());
}

SafeSets seed_only_sets(const MdpInstance& inst) {
  SafeSets out = SafeSets::empty_like(inst);
  for (int h = 0; h < inst.H; ++h) {
    const Triplet& t = inst.seed_triplet(h);
    out.states[ix(h)][ix(t.s)] = 1;
    out.actions[ix(h)][ix(t.s)] = {t.a};
  }
  return out;
}

SafeSets full_sets(const MdpInstance& inst) {
  SafeSets out = SafeSets::empty_like(inst);
  std::vector<int> all(ix(inst.n_actions));
  for (int a = 0; a < inst.n_actions; ++a) all[ix(a)] = a;
  for (int h = 0; h < inst.H; ++h) {
    for (int s = 0; s < inst.num_states(h); ++s) {
      out.states[ix(h)][ix(s)] = 1;
      out.actions[ix(h)][ix(s)] = all;
    }
  }
  return out;
}

}  // namespace

BonusParams compute_bonus_params(const std::vector<double>& c0, double c_bar, double delta_phi_c, int H, double beta,
                                 double delta_tilde, double kappa) {
  if (static_cast<int>(c0.size()) != H || H < 1) throw ContractViolation("compute_bonus_params: one seed cost per step");
  if (!(beta > 0.0) || !(delta_tilde > 0.0) || !(kappa >= 0.0)) {
    throw ConfigError("compute_bonus_params: beta and delta_tilde must be positive, kappa non-negative");
  }
  const double scale = 4.0 * beta * H;
  BonusParams out;
  out.eps2.resize(ix(H));
  out.eps3.resize(ix(H));
  for (int h = 0; h < H; ++h) {
    const double c_future = *std::max_element(c0.begin() + h, c0.end());
    const double current = c_bar - c0[ix(h)] - delta_phi_c;
    const double future = c_bar - c_future - delta_phi_c;
    if (!(current > 0.0)) margin_error("current balance c_bar - c0_h - delta_phi_c", h, current);
    if (!(future > 0.0)) margin_error("future balance c_bar - max c0 - delta_phi_c", h, future);
    const double rho = future / current;
    const double d2 = future - rho * kappa;
    const double d3 = future - kappa;
    if (!(d2 > 0.0)) margin_error("future balance minus rho * kappa", h, d2);
    if (!(d3 > 0.0)) margin_error("future balance minus kappa", h, d3);
    out.eps2[ix(h)] = scale / delta_tilde * rho / d2;
    out.eps3[ix(h)] = scale / delta_tilde / d3;
  }
  const double first = c_bar - c0[0] - delta_phi_c;
  if (!(first > 0.0)) margin_error("first-step balance c_bar - c0_1 - delta_phi_c", -1, first);
  out.eps4 = scale / first;
  return out;
}

AgentConfig make_agent_config(const MdpInstance& inst, const InstanceDiagnostics& diag, const AgentOptions& opt) {
  if (opt.K < 1) throw ConfigError("agent config: K must be at least 1");
  if (!(opt.p > 0.0 && opt.p < 1.0)) throw ConfigError("agent config: p must lie in (0,1)");
  if (!(opt.b_beta >= 0.0)) throw ConfigError("agent config: b_beta must be non-negative");
  if (!(opt.lambda0 > 0.0)) throw ConfigError("agent config: lambda0 must be positive");

  AgentConfig cfg;
  cfg.K = opt.K;
  cfg.p = opt.p;
  cfg.b_beta = opt.b_beta;
  cfg.lambda0 = opt.lambda0;
  cfg.lambda = opt.lambda.value_or(static_cast<double>(inst.d));
  if (!(cfg.lambda >= inst.d)) throw ConfigError("agent config: lambda must be at least d");

  const double T = static_cast<double>(inst.H) * opt.K;
  const double D = inst.bounds.D;
  cfg.beta = opt.beta ? *opt.beta
                      : beta_from_theorem2(inst.d, T, D, inst.sigma, inst.bounds.L, cfg.lambda, opt.p, opt.b_beta, inst.H);
  if (!(cfg.beta > 0.0) || !std::isfinite(cfg.beta)) throw ConfigError("agent config: beta must be positive");

  const double formula = std::ceil(4.0 * cfg.beta * D * std::sqrt(T) * std::log(inst.d / opt.p));
  cfg.K_prime_formula = static_cast<int>(std::min(formula, 1e9));
  if (opt.K_prime) {
    if (*opt.K_prime < 0 || *opt.K_prime > opt.K) throw ConfigError("agent config: K' must lie in [0, K]");
    cfg.K_prime = *opt.K_prime;
  } else {
    cfg.K_prime = std::min(cfg.K_prime_formula, opt.K / 10);
  }
  cfg.kappa = 4.0 * cfg.beta * D / (cfg.lambda + cfg.lambda0 * cfg.K_prime);
  cfg.delta_tilde = opt.delta_tilde ? *opt.delta_tilde : (diag.delta > 0.0 ? diag.delta : 1.0);
  if (!(cfg.delta_tilde > 0.0)) throw ConfigError("agent config: delta_tilde must be positive");
  cfg.eps1 = cfg.beta + 1.0;
  cfg.tie_break = opt.tie_break;

  if (opt.safety_bonuses) {
    const double dphi = opt.delta_phi_c.value_or(diag.delta_phi_c);
    const BonusParams b =
        compute_bonus_params(inst.seed.costs, inst.c_bar, dphi, inst.H, cfg.beta, cfg.delta_tilde, cfg.kappa);
    cfg.eps2 = b.eps2;
    cfg.eps3 = b.eps3;
    cfg.eps4 = b.eps4;
  } else {
    cfg.eps2.assign(ix(inst.H), 0.0);
    cfg.eps3.assign(ix(inst.H), 0.0);
    cfg.eps4 = 0.0;
  }
  return cfg;
}

std::string to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::LsviNew:
      return "lsvi-new";
    case AgentKind::SeedOnly:
      return "seed-only";
    case AgentKind::Unconstrained:
      return "unconstrained";
  }
  return "unknown";
}

AgentKind agent_kind_from_string(const std::string& name) {
  if (name == "lsvi-new") return AgentKind::LsviNew;
  if (name == "seed-only") return AgentKind::SeedOnly;
  if (name == "unconstrained") return AgentKind::Unconstrained;
  throw ConfigError("unknown agent '" + name + "' (expected lsvi-new, seed-only or unconstrained)");
}

std::string to_string(TieBreak rule) {
  return rule == TieBreak::SmallestIndex ? "smallest-index" : "pre-clamp";
}

TieBreak tie_break_from_string(const std::string& name) {
  if (name == "smallest-index") return TieBreak::SmallestIndex;
  if (name == "pre-clamp") return TieBreak::PreClampScore;
  throw ConfigError("unknown tie-break rule '" + name + "' (expected smallest-index or pre-clamp)");
}

Agent::Agent(const MdpInstance& inst, AgentConfig cfg, AgentKind kind)
    : inst_(&inst), cfg_(std::move(cfg)), kind_(kind), est_(inst, cfg_.lambda, cfg_.beta, cfg_.refactor_period) {
  if (static_cast<int>(cfg_.eps2.size()) != inst.H || static_cast<int>(cfg_.eps3.size()) != inst.H) {
    throw ContractViolation("Agent: eps2/eps3 need one entry per step");
  }
  for (int h = 0; h < inst.H; ++h) {
    gram2_.push_back(linalg::IncrementalInverse::scaled_identity(inst.d, cfg_.lambda, cfg_.refactor_period));
    b2_.push_back(Vec::Zero(inst.d));
    w_hat_.push_back(Vec::Zero(inst.d));
  }
  q_.resize(ix(inst.H));
  e4_.resize(ix(inst.H));
  g_.resize(ix(inst.H));
  v_.resize(ix(inst.H + 1));
  for (int h = 0; h <= inst.H; ++h) {
    v_[ix(h)].assign(ix(inst.num_states(h)), kNaN);
    if (h == inst.H) continue;
    q_[ix(h)].assign(ix(inst.num_states(h)), std::vector<double>(ix(inst.n_actions), kNaN));
    e4_[ix(h)].assign(ix(inst.num_states(h)), std::vector<double>(ix(inst.n_actions), kNaN));
    g_[ix(h)].assign(ix(inst.num_states(h)), kNaN);
  }
  safe_ = seed_only_sets(inst);
  policy_ = Policy::seed_policy(inst);
}

void Agent::plan() {
  if (kind_ == AgentKind::SeedOnly || in_init_phase()) {
    plan_seed();
  } else {
    plan_optimistic();
  }
}

void Agent::plan_seed() {
  safe_ = seed_only_sets(*inst_);
  policy_ = Policy::seed_policy(*inst_);
  planned_values_ = false;
}

void Agent::plan_optimistic() {
  const MdpInstance& inst = *inst_;
  const int H = inst.H;
  const bool constrained = kind_ == AgentKind::LsviNew;
  safe_ = constrained ? build_safe_sets(est_, inst) : full_sets(inst);

  for (int h = 0; h < H; ++h) w_hat_[ix(h)] = gram2_[ix(h)].solve(b2_[ix(h)]);

  // Largest safety uncertainty over each safe pair's support.
  std::vector<std::vector<std::vector<double>>> u_pair(ix(H));
  for (int h = 0; h < H; ++h) {
    u_pair[ix(h)].assign(ix(inst.num_states(h)), std::vector<double>(ix(inst.n_actions), 0.0));
    if (!constrained) continue;
    for (int s = 0; s < inst.num_states(h); ++s) {
      if (!safe_.contains_state(h, s)) continue;
      for (int a : safe_.actions[ix(h)][ix(s)]) {
        const auto& p = inst.pair(h, s, a);
        double m = 0.0;
        for (int sn : p.support) m = std::max(m, est_.uncertainty(h, p.phi[ix(sn)]));
        u_pair[ix(h)][ix(s)][ix(a)] = m;
      }
    }
  }

  // Subsubgraph maximum, accumulated backward along safe actions.
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < inst.num_states(h); ++s) {
      if (!safe_.contains_state(h, s)) {
        g_[ix(h)][ix(s)] = kNaN;
        continue;
      }
      double m = 0.0;
      for (int a : safe_.actions[ix(h)][ix(s)]) {
        m = std::max(m, u_pair[ix(h)][ix(s)][ix(a)]);
        if (h + 1 < H) {
          for (int sn : inst.pair(h, s, a).support) m = std::max(m, g_[ix(h + 1)][ix(sn)]);
        }
      }
      g_[ix(h)][ix(s)] = m;
    }
  }

  const double top = static_cast<double>(H);
  std::fill(v_[ix(H)].begin(), v_[ix(H)].end(), 0.0);
  policy_ = Policy::undefined(inst);
  for (int h = H - 1; h >= 0; --h) {
    const auto& next = v_[ix(h + 1)];
    for (int s = 0; s < inst.num_states(h); ++s) {
      auto& qrow = q_[ix(h)][ix(s)];
      auto& erow = e4_[ix(h)][ix(s)];
      std::fill(qrow.begin(), qrow.end(), kNaN);
      std::fill(erow.begin(), erow.end(), kNaN);
      v_[ix(h)][ix(s)] = kNaN;
      if (!safe_.contains_state(h, s)) continue;
      double best = -1.0;
      double best_raw = -std::numeric_limits<double>::infinity();
      int best_a = -1;
      const bool by_raw = cfg_.tie_break == TieBreak::PreClampScore;
      for (int a : safe_.actions[ix(h)][ix(s)]) {
        const Vec phi_v = inst.phi_v(h, s, a, next);
        double total = inst.pair(h, s, a).reward + w_hat_[ix(h)].dot(phi_v) + cfg_.eps1 * gram2_[ix(h)].conf_norm(phi_v);
        double e4 = 0.0;
        if (constrained) {
          total += cfg_.eps2[ix(h)] * u_pair[ix(h)][ix(s)][ix(a)];
          total += cfg_.eps3[ix(h)] * g_[ix(h)][ix(s)];
          if (h == 0) e4 = cfg_.eps4 * u_pair[0][ix(s)][ix(a)];
          total += e4;
        }
        const double qv = std::clamp(total, 0.0, top);
        qrow[ix(a)] = qv;
        erow[ix(a)] = e4;
        if (qv > best || (by_raw && qv == best && total > best_raw)) {
          best = qv;
          best_raw = total;
          best_a = a;
        }
      }
      v_[ix(h)][ix(s)] = best;
      policy_.actions[ix(h)][ix(s)] = best_a;
    }
  }
  planned_values_ = true;
}

int Agent::choose_action(int h, int s) const {
  if (!safe_.contains_state(h, s)) {
    throw ConsistencyError("choose_action: state " + std::to_string(s) + " at step " + std::to_string(h) +
                           " is not in the estimated safe set");
  }
  return policy_.at(h, s);
}

double Agent::q(int h, int s, int a) const { return q_.at(ix(h)).at(ix(s)).at(ix(a)); }
double Agent::v(int h, int s) const { return v_.at(ix(h)).at(ix(s)); }
double Agent::eps4_term(int h, int s, int a) const { return e4_.at(ix(h)).at(ix(s)).at(ix(a)); }
double Agent::subsubgraph_bonus(int h, int s) const { return g_.at(ix(h)).at(ix(s)); }

void Agent::add_regression_sample(int h, int s, int a, int s_next, const std::vector<double>& next_values) {
  const Vec phi_v = inst_->phi_v(h, s, a, next_values);
  if (!phi_v.allFinite()) throw ContractViolation("add_regression_sample: non-finite value table");
  if (phi_v.isZero(0.0)) return;
  gram2_[ix(h)].rank_one_update(phi_v);
  b2_[ix(h)] += phi_v * next_values.at(ix(s_next));
}

EpisodeLog Agent::run_episode(std::mt19937_64& rng, const EpisodeObserver& observer) {
  const MdpInstance& inst = *inst_;
  plan();

  EpisodeLog log;
  log.k = episode_ + 1;
  log.init_phase = in_init_phase();
  log.states.push_back(inst.s1);
  int s = inst.s1;
  for (int h = 0; h < inst.H; ++h) {
    const int a = choose_action(h, s);
    const StepOutcome out = step(inst, h, s, a, rng);
    log.actions.push_back(a);
    log.rewards.push_back(out.reward);
    log.observations.push_back(out.obs);
    if (!within_threshold(true_cost(inst, out.obs.triplet), inst.c_bar)) ++log.violations;
    s = out.s_next;
    log.states.push_back(s);
  }
  log.value = evaluate_policy(inst, policy_);
  if (planned_values_) log.v_hat = v_[0][ix(inst.s1)];
  for (int h = 0; h < inst.H; ++h) log.safe_set_sizes.push_back(safe_.count_states(h));

  if (observer) observer(EpisodeView{log.k, this, &log});
  ingest(log);
  ++episode_;
  return log;
}

void Agent::ingest(const EpisodeLog& log) {
  const MdpInstance& inst = *inst_;
  if (kind_ == AgentKind::LsviNew) {
    for (const auto& obs : log.observations) est_.ingest(obs.triplet.h, inst.feature(obs.triplet), obs.value);
  }
  if (planned_values_) {
    for (int h = 0; h < inst.H; ++h) {
      add_regression_sample(h, log.states[ix(h)], log.actions[ix(h)], log.states[ix(h + 1)], v_[ix(h + 1)]);
    }
  }
}

std::vector<EpisodeLog> Agent::run(std::mt19937_64& rng, const EpisodeObserver& observer) {
  std::vector<EpisodeLog> logs;
  logs.reserve(ix(std::max(cfg_.K - episode_, 0)));
  while (episode_ < cfg_.K) logs.push_back(run_episode(rng, observer));
  return logs;
}

std::vector<EpisodeLog> run_agent(const MdpInstance& inst, const AgentConfig& cfg, AgentKind kind,
                                  std::mt19937_64& rng, const EpisodeObserver& observer) {
  Agent agent(inst, cfg, kind);
  return agent.run(rng, observer);
}

std::vector<EpisodeLog> baseline_seed_only(const MdpInstance& inst, int K, std::mt19937_64& rng) {
  AgentConfig cfg;
  cfg.K = K;
  cfg.lambda = static_cast<double>(inst.d);
  cfg.beta = 1.0;
  cfg.eps2.assign(ix(inst.H), 0.0);
  cfg.eps3.assign(ix(inst.H), 0.0);
  return run_agent(inst, cfg, AgentKind::SeedOnly, rng);
}

std::vector<EpisodeLog> baseline_unconstrained(const MdpInstance& inst, const AgentConfig& cfg, std::mt19937_64& rng) {
  AgentConfig c = cfg;
  c.K_prime = 0;
  return run_agent(inst, c, AgentKind::Unconstrained, rng);
}

}  // namespace safe_lsvi
