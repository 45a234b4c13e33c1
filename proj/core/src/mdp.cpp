#include "safe_lsvi/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "safe_lsvi/errors.hpp"

namespace safe_lsvi {

namespace {

constexpr double kSupportTol = 1e-12;
constexpr double kSumTol = 1e-10;
constexpr double kBoundTol = 1e-9;

std::string where(int h, int s, int a) {
  return "(h=" + std::to_string(h) + ", s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
}

[[noreturn]] void fail(const std::string& msg) { throw ContractViolation("MdpInstance: " + msg); }

}  // namespace

const PairData& MdpInstance::pair(int h, int s, int a) const {
  if (h < 0 || h >= H) fail("step " + std::to_string(h) + " out of range");
  if (s < 0 || s >= num_states(h)) fail("state " + std::to_string(s) + " not in layer " + std::to_string(h));
  if (a < 0 || a >= n_actions) fail("action " + std::to_string(a) + " out of range");
  return pairs[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
}

const Vec& MdpInstance::feature(int h, int s, int a, int s_next) const {
  const auto& p = pair(h, s, a);
  if (s_next < 0 || s_next >= num_states(h + 1)) {
    fail("next state " + std::to_string(s_next) + " not in layer " + std::to_string(h + 1));
  }
  return p.phi[static_cast<std::size_t>(s_next)];
}

bool MdpInstance::in_support(int h, int s, int a, int s_next) const {
  const auto& sup = pair(h, s, a).support;
  return std::binary_search(sup.begin(), sup.end(), s_next);
}

double MdpInstance::transition_prob(int h, int s, int a, int s_next) const {
  return mu_star[static_cast<std::size_t>(h)].dot(feature(h, s, a, s_next));
}

Vec MdpInstance::phi_v(int h, int s, int a, std::span<const double> next_values) const {
  const auto& p = pair(h, s, a);
  if (static_cast<int>(next_values.size()) != num_states(h + 1)) {
    fail("phi_v: value table size does not match layer " + std::to_string(h + 1));
  }
  Vec out = Vec::Zero(d);
  for (int sn : p.support) {
    out.noalias() += next_values[static_cast<std::size_t>(sn)] * p.phi[static_cast<std::size_t>(sn)];
  }
  return out;
}

double true_cost(const MdpInstance& inst, int h, int s, int a, int s_next) {
  if (!inst.in_support(h, s, a, s_next)) {
    throw ContractViolation("true_cost: next state " + std::to_string(s_next) +
                            " is outside the support of " + where(h, s, a));
  }
  return inst.gamma_star[static_cast<std::size_t>(h)].dot(inst.feature(h, s, a, s_next));
}

StepOutcome step(const MdpInstance& inst, int h, int s, int a, std::mt19937_64& rng) {
  if (h < 0 || h >= inst.H) throw ContractViolation("step: step index out of range");
  if (s < 0 || s >= inst.num_states(h)) {
    throw ContractViolation("step: state " + std::to_string(s) + " not in layer " + std::to_string(h));
  }
  const auto& p = inst.pair(h, s, a);

  int s_next = p.support.back();
  if (p.support.size() > 1) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double acc = 0.0;
    for (int sn : p.support) {
      acc += inst.transition_prob(h, s, a, sn);
      if (u < acc) {
        s_next = sn;
        break;
      }
    }
  }

  StepOutcome out;
  out.s_next = s_next;
  out.reward = p.reward;
  out.obs.triplet = Triplet{h, s, a, s_next};
  out.obs.value = true_cost(inst, h, s, a, s_next);
  if (inst.sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, inst.sigma);
    out.obs.value += noise(rng);
  }
  return out;
}

double compute_feature_bound(const MdpInstance& inst) {
  const double top = static_cast<double>(inst.H);
  double best = 0.0;
  for (int h = 0; h < inst.H; ++h) {
    for (int s = 0; s < inst.num_states(h); ++s) {
      for (int a = 0; a < inst.n_actions; ++a) {
        const auto& p = inst.pair(h, s, a);
        const auto m = p.support.size();
        if (m <= 12) {
          // |phi_V| is convex in V, so its max over the box sits on a vertex.
          for (unsigned mask = 1; mask < (1u << m); ++mask) {
            Vec acc = Vec::Zero(inst.d);
            for (std::size_t j = 0; j < m; ++j) {
              if (mask & (1u << j)) acc += p.phi[static_cast<std::size_t>(p.support[j])];
            }
            best = std::max(best, top * acc.norm());
          }
        } else {
          Vec acc = Vec::Zero(inst.d);
          for (int sn : p.support) acc += p.phi[static_cast<std::size_t>(sn)];
          best = std::max(best, top * acc.norm());
        }
      }
    }
  }
  return best;
}

double compute_parameter_bound(const MdpInstance& inst) {
  double best = 0.0;
  for (int h = 0; h < inst.H; ++h) {
    best = std::max(best, inst.mu_star[static_cast<std::size_t>(h)].norm());
    best = std::max(best, inst.gamma_star[static_cast<std::size_t>(h)].norm());
  }
  return best;
}

void MdpInstance::validate() const {
  if (d < 1) fail("dimension must be positive");
  if (H < 1) fail("horizon must be positive");
  if (static_cast<int>(layer_sizes.size()) != H + 1) fail("layer_sizes must have H+1 entries");
  for (int n : layer_sizes) {
    if (n < 1) fail("every layer needs at least one state");
  }
  if (n_actions < 1) fail("need at least one action");
  if (s1 < 0 || s1 >= layer_sizes[0]) fail("start state outside layer 0");
  if (!std::isfinite(c_bar)) fail("c_bar must be finite");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail("sigma must be finite and non-negative");
  if (static_cast<int>(mu_star.size()) != H || static_cast<int>(gamma_star.size()) != H) {
    fail("mu_star and gamma_star need one vector per step");
  }
  if (static_cast<int>(pairs.size()) != H) fail("pairs must have H layers");

  for (int h = 0; h < H; ++h) {
    const auto& mu = mu_star[static_cast<std::size_t>(h)];
    const auto& gamma = gamma_star[static_cast<std::size_t>(h)];
    if (mu.size() != d || gamma.size() != d) fail("parameter dimension mismatch at step " + std::to_string(h));
    if (mu.norm() > bounds.L * (1.0 + kBoundTol) || gamma.norm() > bounds.L * (1.0 + kBoundTol)) {
      fail("parameter norm exceeds L at step " + std::to_string(h));
    }
    const int n_next = layer_sizes[static_cast<std::size_t>(h + 1)];
    if (static_cast<int>(pairs[static_cast<std::size_t>(h)].size()) != num_states(h)) {
      fail("pairs layer " + std::to_string(h) + " has the wrong number of states");
    }
    for (int s = 0; s < num_states(h); ++s) {
      if (static_cast<int>(pairs[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)].size()) != n_actions) {
        fail("wrong action count at " + where(h, s, 0));
      }
      for (int a = 0; a < n_actions; ++a) {
        const auto& p = pair(h, s, a);
        if (!(p.reward >= 0.0 && p.reward <= 1.0)) fail("reward outside [0,1] at " + where(h, s, a));
        if (static_cast<int>(p.phi.size()) != n_next) fail("dense feature row has wrong length at " + where(h, s, a));
        if (p.support.empty()) fail("empty support at " + where(h, s, a));
        if (!std::is_sorted(p.support.begin(), p.support.end()) ||
            std::adjacent_find(p.support.begin(), p.support.end()) != p.support.end()) {
          fail("support must be sorted and unique at " + where(h, s, a));
        }
        if (p.support.front() < 0 || p.support.back() >= n_next) fail("support out of range at " + where(h, s, a));

        double total = 0.0;
        for (int sn = 0; sn < n_next; ++sn) {
          const auto& f = p.phi[static_cast<std::size_t>(sn)];
          if (f.size() != d || !f.allFinite()) fail("bad feature at " + where(h, s, a));
          const double prob = mu.dot(f);
          const bool on = std::binary_search(p.support.begin(), p.support.end(), sn);
          if (on) {
            if (!(prob > 0.0)) fail("non-positive probability on support at " + where(h, s, a));
            const double c = gamma.dot(f);
            if (c < -kSupportTol || c > 1.0 + kSupportTol) fail("cost outside [0,1] at " + where(h, s, a));
            total += prob;
          } else if (std::abs(prob) > kSupportTol) {
            fail("probability mass off the support at " + where(h, s, a));
          }
        }
        if (std::abs(total - 1.0) > kSumTol) fail("transition probabilities do not sum to 1 at " + where(h, s, a));
      }
    }
  }

  if (!(bounds.D >= compute_feature_bound(*this) * (1.0 - kBoundTol))) fail("feature bound D too small");

  if (static_cast<int>(seed.triplets.size()) != H || static_cast<int>(seed.costs.size()) != H) {
    fail("seed subgraph needs one triplet and one cost per step");
  }
  for (int h = 0; h < H; ++h) {
    const auto& t = seed.triplets[static_cast<std::size_t>(h)];
    if (t.h != h) fail("seed triplet step index mismatch");
    if (h == 0 && t.s != s1) fail("seed subgraph must start at s1");
    if (h > 0 && t.s != seed.triplets[static_cast<std::size_t>(h - 1)].s_next) fail("seed subgraph is not a chain");
    const auto& p = pair(h, t.s, t.a);
    if (p.support.size() != 1 || p.support.front() != t.s_next) {
      fail("seed pair must move deterministically to its seed next state at step " + std::to_string(h));
    }
    const double c0 = seed.costs[static_cast<std::size_t>(h)];
    if (c0 > c_bar) fail("seed cost exceeds c_bar at step " + std::to_string(h));
    if (std::abs(c0 - gamma_star[static_cast<std::size_t>(h)].dot(feature(t))) > kSupportTol) {
      fail("seed cost does not match the true cost at step " + std::to_string(h));
    }
    if (!(feature(t).norm() > 0.0)) fail("seed feature is zero at step " + std::to_string(h));
  }
}

}  // namespace safe_lsvi
