#pragma once

// Projected ridge estimator of the safety parameter and the optimistic
// cost estimate built on it.
//
// Per step h the seed feature phi0 splits R^d into its span U and the
// complement U_perp. The cost of phi along U is known exactly from the
// seed cost c0; only the U_perp part of gamma* is estimated:
//   gram  = lambda I + sum psi psi^T,   psi = proj_perp(phi_tau)
//   rhs   = sum psi (c_hat_tau - span_part(phi_tau))
//   gamma_hat = gram^{-1} rhs
// `gram` is the positive definite completion of lambda*proj_perp(I) + sum psi psi^T
// (it adds lambda along U); for vectors in U_perp both give the same norm.

#include <vector>

#include "safe_lsvi/linalg.hpp"
#include "safe_lsvi/mdp.hpp"

namespace safe_lsvi {

struct SafetyQuery {
  double c_tilde = 0.0;    // span_part + perp_part + bonus
  double span_part = 0.0;  // <proj_U(phi), u0> / |phi0| * c0
  double perp_part = 0.0;  // <gamma_hat, proj_perp(phi)>
  double bonus = 0.0;      // beta * |proj_perp(phi)|_{gram^{-1}}
};

class SafetyEstimator {
 public:
  /// One estimator per step, seeded from the instance's seed subgraph.
  /// Requires lambda > 0 and beta > 0.
  SafetyEstimator(const MdpInstance& inst, double lambda, double beta,
                  int refactor_period = linalg::IncrementalInverse::kDefaultRefactorPeriod);

  /// Explicit seeds (one per step). `seed_features[h]` must be non-zero.
  SafetyEstimator(const std::vector<Vec>& seed_features, std::vector<double> seed_costs, double lambda,
                  double beta, int refactor_period = linalg::IncrementalInverse::kDefaultRefactorPeriod);

  /// Adds one observed cost of the executed triplet with feature `phi`.
  /// Throws ContractViolation for non-finite input.
  void ingest(int h, const Vec& phi, double observed_cost);

  SafetyQuery estimate(int h, const Vec& phi) const;

  /// |proj_perp(phi)| in the inverse-Gram metric (the bonus without beta).
  double uncertainty(int h, const Vec& phi) const;

  /// Projection onto U_perp, with components below 1e-12 relative snapped
  /// to the exact zero vector (so seed features contribute nothing).
  Vec perp(int h, const Vec& phi) const;
  double span_part(int h, const Vec& phi) const;

  /// |proj_perp(gamma_true) - gamma_hat|_{gram}: the quantity the
  /// confidence radius bounds.
  double parameter_error(int h, const Vec& gamma_true) const;

  int horizon() const { return static_cast<int>(steps_.size()); }
  int dim() const;
  double lambda() const { return lambda_; }
  double beta() const { return beta_; }
  long samples(int h) const { return step_at(h).samples; }
  const Vec& gamma_hat(int h) const { return step_at(h).gamma_hat; }
  const Vec& rhs(int h) const { return step_at(h).rhs; }
  const Mat& gram(int h) const { return step_at(h).gram.matrix(); }
  const Mat& gram_inverse(int h) const { return step_at(h).gram.inverse(); }
  const linalg::SeedDirection& seed(int h) const { return step_at(h).seed; }
  double seed_cost(int h) const { return step_at(h).seed_cost; }

 private:
  struct Step {
    linalg::SeedDirection seed;
    double seed_cost;
    linalg::IncrementalInverse gram;
    Vec rhs;
    Vec gamma_hat;
    long samples = 0;
  };

  const Step& step_at(int h) const;

  std::vector<Step> steps_;
  double lambda_;
  double beta_;
};

/// Confidence radius of the projected estimator:
///   sigma sqrt(d log((2 + 2 T D^2 / lambda) / p)) + sqrt(lambda) L.
double lemma5_radius(int d, double T, double D, double sigma, double L, double lambda, double p);

/// Default choice of the safety bonus radius:
///   max{ lemma5_radius(...), b_beta d H sqrt(log(d T / p)) }.
double beta_from_theorem2(int d, double T, double D, double sigma, double L, double lambda, double p,
                          double b_beta, int H);

}  // namespace safe_lsvi
