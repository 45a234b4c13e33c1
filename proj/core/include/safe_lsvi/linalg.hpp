#pragma once

// Dense primitives for seed-line projections, Gram matrices and
// inverse-weighted confidence norms.

#include <Eigen/Core>

namespace safe_lsvi::linalg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Normalized seed feature plus the norm of the raw feature. Defines the
/// seed line U (span of the seed feature) and its orthogonal complement.
class SeedDirection {
 public:
  /// Throws ContractViolation for a zero or non-finite feature.
  static SeedDirection from_feature(const Vec& seed_feature);

  const Vec& unit() const noexcept { return unit_; }
  double norm() const noexcept { return norm_; }
  Eigen::Index dim() const noexcept { return unit_.size(); }

 private:
  SeedDirection(Vec unit, double norm) : unit_(std::move(unit)), norm_(norm) {}

  Vec unit_;
  double norm_;
};

/// <x, u> u for the seed unit u.
Vec project_span(const SeedDirection& dir, const Vec& x);

/// x - project_span(dir, x).
Vec project_perp(const SeedDirection& dir, const Vec& x);

/// G + v v^T.
Mat gram_update(const Mat& gram, const Vec& v);

/// sqrt(x^T G^{-1} x). G must be symmetric positive definite; a failed
/// Cholesky factorization raises NumericalError carrying the condition number.
double conf_norm(const Mat& gram, const Vec& x);

/// G^{-1} b via Cholesky. Raises NumericalError when G is not positive
/// definite or its condition number exceeds kMaxCondition.
Vec solve_regularized(const Mat& gram, const Vec& b);

inline constexpr double kMaxCondition = 1e12;

/// 2-norm condition number of a symmetric matrix (ratio of extreme |eigenvalues|).
double condition_number(const Mat& symmetric);

/// Symmetric positive definite matrix together with its inverse, kept in
/// sync through Sherman-Morrison rank-one updates. Every `refactor_period`
/// updates the inverse is recomputed from scratch to bound drift; a period
/// of 0 disables refactoring.
class IncrementalInverse {
 public:
  static constexpr int kDefaultRefactorPeriod = 256;

  IncrementalInverse() = default;
  explicit IncrementalInverse(Mat initial, int refactor_period = kDefaultRefactorPeriod);

  static IncrementalInverse scaled_identity(Eigen::Index dim, double lambda,
                                            int refactor_period = kDefaultRefactorPeriod);

  void rank_one_update(const Vec& v);

  const Mat& matrix() const noexcept { return matrix_; }
  const Mat& inverse() const noexcept { return inverse_; }
  Eigen::Index dim() const noexcept { return matrix_.rows(); }
  long updates() const noexcept { return updates_; }

  /// sqrt(x^T G^{-1} x) using the maintained inverse.
  double conf_norm(const Vec& x) const;
  /// G^{-1} b using the maintained inverse.
  Vec solve(const Vec& b) const;

  /// Recompute the inverse from the accumulated matrix.
  void refactor();

 private:
  Mat matrix_;
  Mat inverse_;
  int refactor_period_ = kDefaultRefactorPeriod;
  long updates_ = 0;
};

}  // namespace safe_lsvi::linalg
