#pragma once

// Optimistic safe value iteration for linear mixture MDPs, plus the
// seed-only and unconstrained comparison agents.
//
// Episode k <= K' replays the seed chain and only feeds the safety
// estimator. Later episodes plan backward over the estimated safe sets:
//   Q_h(s,a) = clamp(r + <w_h, phi_V> + eps1 |phi_V|_{Lambda2^-1}
//                    + eps2_h max_{s'} u_h(s,a,s') + eps3_h max_{G_h(s)} u
//                    + [h = 0] eps4 max_{s'} u_0(s1,a,s'), 0, H)
// with u the safety uncertainty |proj_perp(phi)|_{Lambda1^-1}. The eps4
// term is 0 on later steps, which leaves every argmax unchanged there.

#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "safe_lsvi/assumptions.hpp"
#include "safe_lsvi/linalg.hpp"
#include "safe_lsvi/mdp.hpp"
#include "safe_lsvi/safe_sets.hpp"
#include "safe_lsvi/safety_estimator.hpp"

namespace safe_lsvi {

struct BonusParams {
  std::vector<double> eps2;  // per step
  std::vector<double> eps3;  // per step
  double eps4 = 0.0;
};

/// Exploration weights from the safety balances
///   C_h = c_bar - c0_h - delta_phi_c,  F_h = c_bar - max_{h' >= h} c0_h' - delta_phi_c,
///   rho_h = F_h / C_h:
///   eps2_h = (4 beta H / delta_tilde) rho_h / (F_h - rho_h kappa)
///   eps3_h = (4 beta H / delta_tilde) / (F_h - kappa)
///   eps4   = 4 beta H / C_0
/// Throws ConfigError naming the first nonpositive denominator.
BonusParams compute_bonus_params(const std::vector<double>& c0, double c_bar, double delta_phi_c, int H, double beta,
                                 double delta_tilde, double kappa);

/// Rule for equal (typically saturated at H) Q-values. SmallestIndex is the
/// reference rule; PreClampScore prefers the larger unclamped score and is an
/// opt-in variant for studying saturation.
enum class TieBreak { SmallestIndex, PreClampScore };

struct AgentConfig {
  int K = 0;
  int K_prime = 0;
  int K_prime_formula = 0;  // ceil(4 beta D sqrt(T) log(d/p)) before capping
  double lambda = 0.0;
  double beta = 0.0;
  double b_beta = 0.01;
  double lambda0 = 0.0;
  double kappa = 0.0;
  double delta_tilde = 1.0;
  double p = 0.05;
  double eps1 = 0.0;
  std::vector<double> eps2;
  std::vector<double> eps3;
  double eps4 = 0.0;
  int refactor_period = linalg::IncrementalInverse::kDefaultRefactorPeriod;
  TieBreak tie_break = TieBreak::SmallestIndex;
};

/// User-facing knobs; unset fields take the theory-driven defaults.
struct AgentOptions {
  int K = 1;
  std::optional<int> K_prime;
  double p = 0.05;
  double b_beta = 0.01;
  double lambda0 = 4.0;
  std::optional<double> lambda;  // default d; must be >= d
  std::optional<double> beta;    // default beta_from_theorem2
  std::optional<double> delta_tilde;
  std::optional<double> delta_phi_c;  // default measured from the instance
  bool safety_bonuses = true;         // false leaves eps2/eps3/eps4 at 0 (unconstrained agent)
  TieBreak tie_break = TieBreak::SmallestIndex;
};

/// Theory settings: lambda = d, T = H K, beta from the confidence radius,
/// K' = min(ceil(4 beta D sqrt(T) log(d/p)), floor(K/10)) unless pinned,
/// kappa = 4 beta D / (lambda + lambda0 K'), delta_tilde = delta (1 when
/// delta = 0), eps1 = beta + 1 and the eps from compute_bonus_params.
AgentConfig make_agent_config(const MdpInstance& inst, const InstanceDiagnostics& diag, const AgentOptions& opt);

struct EpisodeLog {
  int k = 0;  // 1-based episode index
  bool init_phase = false;
  std::vector<int> states;    // s_0..s_H
  std::vector<int> actions;   // a_0..a_{H-1}
  std::vector<double> rewards;
  std::vector<CostObservation> observations;
  int violations = 0;      // realized transitions with true cost > c_bar
  double value = 0.0;      // exact V^{pi_k}(s1)
  double v_hat = std::numeric_limits<double>::quiet_NaN();  // planned V_0(s1); NaN when not planned
  std::vector<int> safe_set_sizes;  // estimated safe states per step
};

enum class AgentKind { LsviNew, SeedOnly, Unconstrained };

std::string to_string(AgentKind kind);
AgentKind agent_kind_from_string(const std::string& name);

std::string to_string(TieBreak rule);
TieBreak tie_break_from_string(const std::string& name);

class Agent;

/// Read-only view handed to observers after an episode has been planned
/// and before its observations are ingested.
struct EpisodeView {
  int k = 0;
  const Agent* agent = nullptr;
  const EpisodeLog* log = nullptr;
};

using EpisodeObserver = std::function<void(const EpisodeView&)>;

class Agent {
 public:
  Agent(const MdpInstance& inst, AgentConfig cfg, AgentKind kind = AgentKind::LsviNew);

  /// Steps 1-4 for the next episode. No-op planning (seed replay) during
  /// the initialization phase and for the seed-only agent.
  void plan();

  /// argmax of Q over the estimated safe actions at (h, s); ties follow
  /// cfg.tie_break. Throws ConsistencyError if s is not estimated safe.
  int choose_action(int h, int s) const;

  /// Plans, plays one episode, then ingests its data.
  EpisodeLog run_episode(std::mt19937_64& rng, const EpisodeObserver& observer = {});

  std::vector<EpisodeLog> run(std::mt19937_64& rng, const EpisodeObserver& observer = {});

  /// Deterministic policy the next episode follows (after plan()).
  const Policy& policy() const { return policy_; }
  bool in_init_phase() const { return kind_ == AgentKind::LsviNew && episode_ < cfg_.K_prime; }

  int episode() const { return episode_; }
  AgentKind kind() const { return kind_; }
  const AgentConfig& config() const { return cfg_; }
  const MdpInstance& instance() const { return *inst_; }
  const SafetyEstimator& estimator() const { return est_; }
  const SafeSets& safe_sets() const { return safe_; }

  /// NaN outside the planned (estimated safe) pairs.
  double q(int h, int s, int a) const;
  double v(int h, int s) const;
  const Vec& w_hat(int h) const { return w_hat_.at(static_cast<std::size_t>(h)); }
  const Mat& gram2(int h) const { return gram2_.at(static_cast<std::size_t>(h)).matrix(); }
  const Vec& target_sum(int h) const { return b2_.at(static_cast<std::size_t>(h)); }

  /// Bonus pieces of the last plan, for inspection.
  double eps4_term(int h, int s, int a) const;
  double subsubgraph_bonus(int h, int s) const;

  /// Value-targeted regression step: adds phi_V(s_h, a_h) with target
  /// V(s_{h+1}) for the given next-layer value table.
  void add_regression_sample(int h, int s, int a, int s_next, const std::vector<double>& next_values);

 private:
  void plan_seed();
  void plan_optimistic();
  void ingest(const EpisodeLog& log);

  const MdpInstance* inst_;
  AgentConfig cfg_;
  AgentKind kind_;
  int episode_ = 0;  // completed episodes

  SafetyEstimator est_;
  std::vector<linalg::IncrementalInverse> gram2_;
  std::vector<Vec> b2_;
  std::vector<Vec> w_hat_;

  SafeSets safe_;
  Policy policy_;
  std::vector<std::vector<std::vector<double>>> q_;     // [h][s][a]
  std::vector<std::vector<double>> v_;                  // [0..H][s]
  std::vector<std::vector<std::vector<double>>> e4_;    // [h][s][a]
  std::vector<std::vector<double>> g_;                  // [h][s]
  bool planned_values_ = false;
};

/// Convenience runners.
std::vector<EpisodeLog> run_agent(const MdpInstance& inst, const AgentConfig& cfg, AgentKind kind,
                                  std::mt19937_64& rng, const EpisodeObserver& observer = {});
std::vector<EpisodeLog> baseline_seed_only(const MdpInstance& inst, int K, std::mt19937_64& rng);
std::vector<EpisodeLog> baseline_unconstrained(const MdpInstance& inst, const AgentConfig& cfg, std::mt19937_64& rng);

}  // namespace safe_lsvi
