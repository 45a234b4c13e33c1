#include "safe_lsvi/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "safe_lsvi/errors.hpp"

namespace safe_lsvi::linalg {

namespace {

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* where) {
  if (a != b) {
    throw ContractViolation(std::string(where) + ": dimension mismatch (" + std::to_string(a) +
                            " vs " + std::to_string(b) + ")");
  }
}

void require_square(const Mat& m, const char* where) {
  if (m.rows() != m.cols()) {
    throw ContractViolation(std::string(where) + ": matrix is not square");
  }
}

Eigen::LLT<Mat> factor_or_throw(const Mat& gram, const char* where) {
  Eigen::LLT<Mat> llt(gram);
  if (llt.info() != Eigen::Success) {
    const double cond = condition_number(gram);
    throw NumericalError(std::string(where) + ": matrix is not positive definite (condition " +
                             std::to_string(cond) + ")",
                         cond);
  }
  return llt;
}

}  // namespace

SeedDirection SeedDirection::from_feature(const Vec& seed_feature) {
  if (!seed_feature.allFinite()) {
    throw ContractViolation("SeedDirection: seed feature has non-finite entries");
  }
  const double n = seed_feature.norm();
  if (!(n > 0.0)) {
    throw ContractViolation("SeedDirection: seed feature is the zero vector");
  }
  return SeedDirection(seed_feature / n, n);
}

Vec project_span(const SeedDirection& dir, const Vec& x) {
  require_same_dim(dir.dim(), x.size(), "project_span");
  return dir.unit().dot(x) * dir.unit();
}

Vec project_perp(const SeedDirection& dir, const Vec& x) {
  require_same_dim(dir.dim(), x.size(), "project_perp");
  return x - dir.unit().dot(x) * dir.unit();
}

Mat gram_update(const Mat& gram, const Vec& v) {
  require_square(gram, "gram_update");
  require_same_dim(gram.rows(), v.size(), "gram_update");
  Mat out = gram;
  out.selfadjointView<Eigen::Lower>().rankUpdate(v);
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

double condition_number(const Mat& symmetric) {
  if (symmetric.size() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetric, Eigen::EigenvaluesOnly);
  const auto abs_ev = es.eigenvalues().cwiseAbs();
  const double lo = abs_ev.minCoeff();
  const double hi = abs_ev.maxCoeff();
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

double conf_norm(const Mat& gram, const Vec& x) {
  require_square(gram, "conf_norm");
  require_same_dim(gram.rows(), x.size(), "conf_norm");
  if (x.isZero(0.0)) return 0.0;
  const auto llt = factor_or_throw(gram, "conf_norm");
  // x^T G^{-1} x = |L^{-1} x|^2
  const Vec y = llt.matrixL().solve(x);
  return y.norm();
}

Vec solve_regularized(const Mat& gram, const Vec& b) {
  require_square(gram, "solve_regularized");
  require_same_dim(gram.rows(), b.size(), "solve_regularized");
  const auto llt = factor_or_throw(gram, "solve_regularized");
  const double cond = condition_number(gram);
  if (!(cond <= kMaxCondition)) {
    throw NumericalError("solve_regularized: ill-conditioned system (condition " +
                             std::to_string(cond) + ")",
                         cond);
  }
  return llt.solve(b);
}

IncrementalInverse::IncrementalInverse(Mat initial, int refactor_period)
    : matrix_(std::move(initial)), refactor_period_(refactor_period) {
  require_square(matrix_, "IncrementalInverse");
  if (refactor_period_ < 0) {
    throw ContractViolation("IncrementalInverse: negative refactor period");
  }
  refactor();
}

IncrementalInverse IncrementalInverse::scaled_identity(Eigen::Index dim, double lambda,
                                                       int refactor_period) {
  if (!(lambda > 0.0)) {
    throw ContractViolation("IncrementalInverse: regularizer must be positive");
  }
  return IncrementalInverse(lambda * Mat::Identity(dim, dim), refactor_period);
}

void IncrementalInverse::rank_one_update(const Vec& v) {
  require_same_dim(dim(), v.size(), "IncrementalInverse::rank_one_update");
  if (!v.allFinite()) {
    throw ContractViolation("IncrementalInverse::rank_one_update: non-finite vector");
  }
  matrix_.selfadjointView<Eigen::Lower>().rankUpdate(v);
  matrix_.triangularView<Eigen::StrictlyUpper>() = matrix_.transpose();
  ++updates_;

  if (refactor_period_ > 0 && updates_ % refactor_period_ == 0) {
    refactor();
    return;
  }
  const Vec u = inverse_ * v;
  const double denom = 1.0 + v.dot(u);
  inverse_.noalias() -= (u * u.transpose()) / denom;
  inverse_ = 0.5 * (inverse_ + inverse_.transpose()).eval();
}

double IncrementalInverse::conf_norm(const Vec& x) const {
  require_same_dim(dim(), x.size(), "IncrementalInverse::conf_norm");
  const double q = x.dot(inverse_ * x);
  return std::sqrt(std::max(0.0, q));
}

Vec IncrementalInverse::solve(const Vec& b) const {
  require_same_dim(dim(), b.size(), "IncrementalInverse::solve");
  return inverse_ * b;
}

void IncrementalInverse::refactor() {
  const auto llt = factor_or_throw(matrix_, "IncrementalInverse::refactor");
  inverse_ = llt.solve(Mat::Identity(dim(), dim()));
  inverse_ = 0.5 * (inverse_ + inverse_.transpose()).eval();
}

}  // namespace safe_lsvi::linalg
