#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "ridgeless/error.hpp"

namespace ridgeless {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Relative gap kept between lambda and the divergence boundary -s_min^2.
inline constexpr double kPenaltyGuardGap = 1e-6;
/// Singular values below s_max * max(n, p) * kRankTolerance count as zero.
inline constexpr double kRankTolerance = 1e-12;

/// Design matrix with its response. Rows are observations.
class Dataset {
 public:
  Dataset(Matrix x, Vector y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.rows() < 1 || x_.cols() < 1) throw InvalidInputError("dataset needs at least one row and one column");
    if (y_.size() != x_.rows())
      throw DimensionMismatchError("response length " + std::to_string(y_.size()) + " does not match " +
                                   std::to_string(x_.rows()) + " rows");
    if (!x_.allFinite() || !y_.allFinite()) throw InvalidInputError("dataset contains non-finite values");
  }

  const Matrix& x() const noexcept { return x_; }
  const Vector& y() const noexcept { return y_; }
  Index rows() const noexcept { return x_.rows(); }
  Index cols() const noexcept { return x_.cols(); }

 private:
  Matrix x_;
  Vector y_;
};

/// Thin SVD X = U diag(s) V' with r = min(n, p) columns. Numerically zero
/// singular values are kept; `tolerance()` decides which of them count.
struct SvdFactorization {
  Matrix u;  // n x r
  Vector s;  // r, descending
  Matrix v;  // p x r

  Index rank() const noexcept { return s.size(); }

  double tolerance() const noexcept {
    if (s.size() == 0) return 0.0;
    return s(0) * static_cast<double>(std::max(u.rows(), v.rows())) * kRankTolerance;
  }

  Index effective_rank() const noexcept {
    const double tol = tolerance();
    Index k = 0;
    while (k < s.size() && s(k) > tol) ++k;
    return k;
  }

  /// Smallest squared singular value above the rank tolerance (0 when X = 0).
  double smin_sq() const noexcept {
    const Index k = effective_rank();
    return k == 0 ? 0.0 : s(k - 1) * s(k - 1);
  }
};

inline SvdFactorization thin_svd(const Matrix& x) {
  if (!x.allFinite()) throw InvalidInputError("thin_svd: matrix contains non-finite values");
  if (x.rows() == 0 || x.cols() == 0) throw InvalidInputError("thin_svd: empty matrix");
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return SvdFactorization{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

/// True when lambda lies strictly inside (-s_min^2 (1 - gap), inf).
inline bool penalty_admissible(double lambda, double smin_sq) noexcept {
  if (smin_sq <= 0.0) return true;  // X = 0: every estimate is zero
  return lambda > -smin_sq * (1.0 - kPenaltyGuardGap);
}

/// Ridge estimates for many penalties from a single factorization. Every
/// coefficient vector is V w(lambda) with w_i = s_i / (s_i^2 + lambda) (U'y)_i.
class RidgePath {
 public:
  RidgePath(SvdFactorization svd, const Vector& y) : svd_(std::move(svd)) {
    if (y.size() != svd_.u.rows())
      throw DimensionMismatchError("ridge_path: response length does not match design rows");
    if (!y.allFinite()) throw InvalidInputError("ridge_path: response contains non-finite values");
    uty_ = svd_.u.transpose() * y;
    active_ = svd_.effective_rank();
    smin_sq_ = svd_.smin_sq();
  }

  const SvdFactorization& svd() const noexcept { return svd_; }
  const Vector& projected_response() const noexcept { return uty_; }
  double smin_sq() const noexcept { return smin_sq_; }
  bool admissible(double lambda) const noexcept { return active_ == 0 || penalty_admissible(lambda, smin_sq_); }

  /// Coordinates of the estimate in the basis V (length r).
  Vector spectral_coefficients(double lambda) const {
    check(lambda);
    Vector w = Vector::Zero(svd_.rank());
    for (Index i = 0; i < active_; ++i) {
      const double si = svd_.s(i);
      w(i) = si / (si * si + lambda) * uty_(i);
    }
    return w;
  }

  Vector coefficients(double lambda) const { return svd_.v * spectral_coefficients(lambda); }

 private:
  void check(double lambda) const {
    if (!std::isfinite(lambda)) throw InvalidInputError("ridge_path: lambda must be finite");
    if (!admissible(lambda))
      throw SingularPenaltyError("ridge_path: lambda " + std::to_string(lambda) + " at or below -s_min^2 = " +
                                 std::to_string(-smin_sq_));
  }

  SvdFactorization svd_;
  Vector uty_;
  Index active_ = 0;
  double smin_sq_ = 0.0;
};

/// V diag(s / (s^2 + lambda)) U' y. Valid for negative lambda above -s_min^2.
inline Vector ridge_path(const SvdFactorization& svd, const Vector& y, double lambda) {
  return RidgePath(svd, y).coefficients(lambda);
}

/// Pseudoinverse solution X^+ y: minimum-norm interpolator when n < p,
/// ordinary least squares when X has full column rank.
inline Vector min_norm_ols(const Matrix& x, const Vector& y) { return ridge_path(thin_svd(x), y, 0.0); }

/// (X'X + lambda I)^{-1} X'y by a dense pivoted LU solve. Independent of the
/// SVD route and used as its oracle.
inline Vector ridge_direct(const Matrix& x, const Vector& y, double lambda) {
  if (y.size() != x.rows()) throw DimensionMismatchError("ridge_direct: response length does not match rows");
  if (!x.allFinite() || !y.allFinite() || !std::isfinite(lambda))
    throw InvalidInputError("ridge_direct: non-finite input");
  Matrix a = x.transpose() * x;
  a.diagonal().array() += lambda;
  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) throw SingularPenaltyError("ridge_direct: X'X + lambda I is singular");
  return lu.solve(x.transpose() * y);
}

struct RidgeFit {
  Vector coefficients;
  double intercept = 0.0;
  double lambda = 0.0;
  double smin_sq = 0.0;  // of the centered training design
};

/// Ridge with an unpenalized intercept: columns and response are centered by
/// their training means, the slope is fitted on centered data, and the
/// intercept restores the means.
inline RidgeFit fit_with_intercept(const Dataset& data, double lambda) {
  const Vector x_mean = data.x().colwise().mean();
  const double y_mean = data.y().mean();
  const Matrix xc = data.x().rowwise() - x_mean.transpose();
  const Vector yc = data.y().array() - y_mean;
  RidgePath path(thin_svd(xc), yc);
  RidgeFit fit;
  fit.coefficients = path.coefficients(lambda);
  fit.intercept = y_mean - x_mean.dot(fit.coefficients);
  fit.lambda = lambda;
  fit.smin_sq = path.smin_sq();
  return fit;
}

inline Vector predict(const RidgeFit& fit, const Matrix& x_new) {
  if (x_new.cols() != fit.coefficients.size())
    throw DimensionMismatchError("predict: expected " + std::to_string(fit.coefficients.size()) + " columns, got " +
                                 std::to_string(x_new.cols()));
  return (x_new * fit.coefficients).array() + fit.intercept;
}

/// k' K^{-1} y: minimum-norm prediction written purely through inner products.
inline double kernel_min_norm_predict(const Matrix& k_train, const Vector& k_test, const Vector& y) {
  const Index n = k_train.rows();
  if (k_train.cols() != n || k_test.size() != n || y.size() != n)
    throw DimensionMismatchError("kernel_min_norm_predict: inconsistent sizes");
  const double scale = k_train.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) throw SingularKernelError("kernel_min_norm_predict: zero kernel matrix");
  if ((k_train - k_train.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InvalidInputError("kernel_min_norm_predict: kernel matrix is not symmetric");
  Eigen::LDLT<Matrix> ldlt(k_train);
  const Vector d = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || d.minCoeff() <= static_cast<double>(n) * kRankTolerance * d.cwiseAbs().maxCoeff())
    throw SingularKernelError("kernel_min_norm_predict: kernel matrix is singular or indefinite");
  return k_test.dot(ldlt.solve(y));
}

struct GradientDescentOptions {
  std::optional<double> step;  // defaults to 1 / s_max^2
  long max_iters = 1'000'000;
  double tolerance = 1e-10;  // on ||X'(y - X beta)|| relative to ||X'y||
};

struct GradientDescentResult {
  Vector coefficients;
  long iterations = 0;
  bool converged = false;
};

/// Plain gradient descent on ||y - X beta||^2 / 2 started at zero. The
/// observer, if set, sees every iterate after its update.
inline GradientDescentResult gradient_descent_ols(const Matrix& x, const Vector& y,
                                                  const GradientDescentOptions& opts = {},
                                                  const std::function<void(long, const Vector&)>& observer = {}) {
  if (y.size() != x.rows()) throw DimensionMismatchError("gradient_descent_ols: response length mismatch");
  if (!x.allFinite() || !y.allFinite()) throw InvalidInputError("gradient_descent_ols: non-finite input");

  GradientDescentResult res;
  res.coefficients = Vector::Zero(x.cols());
  const Vector xty = x.transpose() * y;
  const double target = opts.tolerance * xty.norm();
  if (xty.norm() == 0.0) {
    res.converged = true;
    return res;
  }

  double step = 0.0;
  if (opts.step) {
    step = *opts.step;
  } else {
    const double smax = thin_svd(x).s(0);
    step = 1.0 / (smax * smax);
  }
  if (!(step > 0.0) || !std::isfinite(step)) throw InvalidInputError("gradient_descent_ols: step must be positive");

  Vector& beta = res.coefficients;
  for (long it = 0; it < opts.max_iters; ++it) {
    const Vector grad = xty - x.transpose() * (x * beta);
    if (grad.norm() <= target) {
      res.converged = true;
      break;
    }
    beta += step * grad;
    res.iterations = it + 1;
    if (!beta.allFinite() || beta.norm() > 1e12)
      throw StepTooLargeError("gradient_descent_ols: iterates diverged; step exceeds 2 / s_max^2");
    if (observer) observer(res.iterations, beta);
  }
  return res;
}

/// Convenience form returning only the final coefficients.
inline Vector gradient_descent_ols(const Matrix& x, const Vector& y, double step, long iters) {
  GradientDescentOptions opts;
  opts.step = step;
  opts.max_iters = iters;
  return gradient_descent_ols(x, y, opts).coefficients;
}

}  // namespace ridgeless
