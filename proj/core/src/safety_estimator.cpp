#include "safe_lsvi/safety_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "safe_lsvi/errors.hpp"

namespace safe_lsvi {

namespace {

constexpr double kSnapRelative = 1e-12;

std::vector<Vec> seed_features_of(const MdpInstance& inst) {
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(inst.H));
  for (int h = 0; h < inst.H; ++h) out.push_back(inst.seed_feature(h));
  return out;
}

}  // namespace

SafetyEstimator::SafetyEstimator(const MdpInstance& inst, double lambda, double beta, int refactor_period)
    : SafetyEstimator(seed_features_of(inst), inst.seed.costs, lambda, beta, refactor_period) {}

SafetyEstimator::SafetyEstimator(const std::vector<Vec>& seed_features, std::vector<double> seed_costs,
                                 double lambda, double beta, int refactor_period)
    : lambda_(lambda), beta_(beta) {
  if (!(lambda > 0.0)) throw ContractViolation("SafetyEstimator: lambda must be positive");
  if (!(beta > 0.0)) throw ContractViolation("SafetyEstimator: beta must be positive");
  if (seed_features.size() != seed_costs.size() || seed_features.empty()) {
    throw ContractViolation("SafetyEstimator: need one seed feature and cost per step");
  }
  const auto d = seed_features.front().size();
  steps_.reserve(seed_features.size());
  for (std::size_t h = 0; h < seed_features.size(); ++h) {
    if (seed_features[h].size() != d) throw ContractViolation("SafetyEstimator: seed dimension mismatch");
    steps_.push_back(Step{linalg::SeedDirection::from_feature(seed_features[h]), seed_costs[h],
                          linalg::IncrementalInverse::scaled_identity(d, lambda, refactor_period),
                          Vec::Zero(d), Vec::Zero(d), 0});
  }
}

const SafetyEstimator::Step& SafetyEstimator::step_at(int h) const {
  if (h < 0 || h >= horizon()) {
    throw ContractViolation("SafetyEstimator: step " + std::to_string(h) + " out of range");
  }
  return steps_[static_cast<std::size_t>(h)];
}

int SafetyEstimator::dim() const { return static_cast<int>(steps_.front().rhs.size()); }

Vec SafetyEstimator::perp(int h, const Vec& phi) const {
  Vec p = linalg::project_perp(step_at(h).seed, phi);
  if (p.norm() <= kSnapRelative * std::max(1.0, phi.norm())) p.setZero();
  return p;
}

double SafetyEstimator::span_part(int h, const Vec& phi) const {
  const auto& st = step_at(h);
  // <proj_U(phi), u> = <phi, u>
  return st.seed.unit().dot(phi) / st.seed.norm() * st.seed_cost;
}

void SafetyEstimator::ingest(int h, const Vec& phi, double observed_cost) {
  if (!phi.allFinite() || !std::isfinite(observed_cost)) {
    throw ContractViolation("SafetyEstimator::ingest: non-finite input");
  }
  const Vec psi = perp(h, phi);
  auto& st = steps_[static_cast<std::size_t>(h)];
  ++st.samples;
  if (psi.isZero(0.0)) return;
  st.gram.rank_one_update(psi);
  st.rhs.noalias() += psi * (observed_cost - span_part(h, phi));
  st.gamma_hat = st.gram.solve(st.rhs);
}

double SafetyEstimator::uncertainty(int h, const Vec& phi) const {
  const Vec psi = perp(h, phi);
  if (psi.isZero(0.0)) return 0.0;
  return step_at(h).gram.conf_norm(psi);
}

SafetyQuery SafetyEstimator::estimate(int h, const Vec& phi) const {
  const auto& st = step_at(h);
  const Vec psi = perp(h, phi);
  SafetyQuery q;
  q.span_part = span_part(h, phi);
  if (!psi.isZero(0.0)) {
    q.perp_part = st.gamma_hat.dot(psi);
    q.bonus = beta_ * st.gram.conf_norm(psi);
  }
  q.c_tilde = q.span_part + q.perp_part + q.bonus;
  return q;
}

double SafetyEstimator::parameter_error(int h, const Vec& gamma_true) const {
  const auto& st = step_at(h);
  const Vec diff = linalg::project_perp(st.seed, gamma_true) - st.gamma_hat;
  return std::sqrt(std::max(0.0, diff.dot(st.gram.matrix() * diff)));
}

double lemma5_radius(int d, double T, double D, double sigma, double L, double lambda, double p) {
  if (d < 1 || !(T > 0.0) || !(D >= 0.0) || !(sigma >= 0.0) || !(L >= 0.0) || !(lambda > 0.0) ||
      !(p > 0.0 && p < 1.0)) {
    throw ContractViolation("lemma5_radius: arguments out of range");
  }
  const double log_term = std::log((2.0 + 2.0 * T * D * D / lambda) / p);
  return sigma * std::sqrt(static_cast<double>(d) * log_term) + std::sqrt(lambda) * L;
}

double beta_from_theorem2(int d, double T, double D, double sigma, double L, double lambda, double p,
                          double b_beta, int H) {
  if (!(b_beta >= 0.0) || H < 1) throw ContractViolation("beta_from_theorem2: arguments out of range");
  const double hoeffding = b_beta * d * H * std::sqrt(std::max(0.0, std::log(static_cast<double>(d) * T / p)));
  return std::max(lemma5_radius(d, T, D, sigma, L, lambda, p), hoeffding);
}

}  // namespace safe_lsvi
