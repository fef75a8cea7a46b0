#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

#include "ridgeless/linalg.hpp"
#include "ridgeless/random.hpp"

namespace ridgeless {

/// Distribution of the appended random entries. Only mean zero and the given
/// variance matter for the ridge equivalence.
enum class RandomLaw { Gaussian, Rademacher };

/// [X | X_q] with X_q holding i.i.d. zero-mean entries of variance var_per_col.
struct AugmentedDesign {
  Matrix x_orig;
  Matrix x_rand;
  double var_per_col = 0.0;
  RandomLaw law = RandomLaw::Gaussian;

  Index q() const noexcept { return x_rand.cols(); }
  Index p() const noexcept { return x_orig.cols(); }

  Matrix augmented() const {
    Matrix out(x_orig.rows(), p() + q());
    out << x_orig, x_rand;
    return out;
  }
};

/// i.i.d. draws with mean 0 and variance `var`, in row-major order.
inline Matrix random_block(Index rows, Index cols, double var, RandomLaw law, Engine& eng) {
  if (law == RandomLaw::Gaussian) return gaussian_matrix(rows, cols, std::sqrt(var), eng);
  std::bernoulli_distribution coin(0.5);
  const double a = std::sqrt(var);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = coin(eng) ? a : -a;
  return m;
}

/// Appends q random columns of variance var (independent of q).
inline AugmentedDesign augment_columns_fixed_variance(const Matrix& x, Index q, double var, std::uint64_t seed,
                                                      RandomLaw law = RandomLaw::Gaussian) {
  if (q < 0) throw InvalidInputError("augment_columns: q must be >= 0");
  if (!(var >= 0.0) || !std::isfinite(var)) throw InvalidInputError("augment_columns: variance must be >= 0");
  Engine eng = make_engine(seed);
  return AugmentedDesign{x, random_block(x.rows(), q, var, law, eng), var, law};
}

/// Appends q random columns of variance total_lambda / q, so that
/// X_q X_q' -> total_lambda I as q grows.
inline AugmentedDesign augment_columns(const Matrix& x, Index q, double total_lambda, std::uint64_t seed,
                                       RandomLaw law = RandomLaw::Gaussian) {
  if (q < 1) throw InvalidInputError("augment_columns: q must be >= 1");
  if (!(total_lambda > 0.0) || !std::isfinite(total_lambda))
    throw InvalidInputError("augment_columns: total_lambda must be > 0");
  return augment_columns_fixed_variance(x, q, total_lambda / static_cast<double>(q), seed, law);
}

/// Relative pivot floor for the n x n Gram system. Squared singular values, so
/// looser than the SVD rank tolerance.
inline constexpr double kGramTolerance = 1e-10;

struct TruncatedEstimate {
  Vector beta_q;     // first p coefficients
  Vector beta_augm;  // all p + q coefficients
};

/// Minimum-norm fit on [X | X_q] through the n x n Gram system
/// beta_augm = X_augm' (X X' + X_q X_q')^{-1} y.
inline TruncatedEstimate min_norm_truncated(const AugmentedDesign& aug, const Vector& y) {
  const Index n = aug.x_orig.rows();
  if (y.size() != n) throw DimensionMismatchError("min_norm_truncated: response length mismatch");
  if (aug.x_rand.rows() != n) throw DimensionMismatchError("min_norm_truncated: random block has wrong row count");

  Matrix gram = aug.x_orig * aug.x_orig.transpose();
  if (aug.q() > 0) gram.noalias() += aug.x_rand * aug.x_rand.transpose();
  Eigen::LDLT<Matrix> ldlt(gram);
  const Vector d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(dmax > 0.0) ||
      d.minCoeff() <= static_cast<double>(n) * kGramTolerance * dmax)
    throw RankDeficiencyError("min_norm_truncated: X_augm X_augm' is singular (p + q < n or degenerate design)");
  const Vector a = ldlt.solve(y);

  TruncatedEstimate est;
  est.beta_augm.resize(aug.p() + aug.q());
  est.beta_augm.head(aug.p()) = aug.x_orig.transpose() * a;
  if (aug.q() > 0) est.beta_augm.tail(aug.q()) = aug.x_rand.transpose() * a;
  est.beta_q = est.beta_augm.head(aug.p());
  return est;
}

/// Prediction of the full augmented model at x_new extended with q fresh
/// random entries drawn from the same law as X_q.
inline double predict_augmented(const AugmentedDesign& aug, const Vector& beta_augm, const Vector& x_new,
                                std::uint64_t seed) {
  if (beta_augm.size() != aug.p() + aug.q() || x_new.size() != aug.p())
    throw DimensionMismatchError("predict_augmented: inconsistent lengths");
  double yhat = x_new.dot(beta_augm.head(aug.p()));
  if (aug.q() > 0) {
    Engine eng = make_engine(seed);
    const Matrix tail = random_block(1, aug.q(), aug.var_per_col, aug.law, eng);
    yhat += tail.row(0).dot(beta_augm.tail(aug.q()));
  }
  return yhat;
}

/// ([X; R], [y; 0]) with R holding q rows of N(0, total_lambda / q) entries.
/// Least squares on the result approaches ridge with penalty total_lambda.
inline Dataset augment_rows(const Matrix& x, const Vector& y, Index q, double total_lambda, std::uint64_t seed) {
  if (q < 1) throw InvalidInputError("augment_rows: q must be >= 1");
  if (!(total_lambda >= 0.0) || !std::isfinite(total_lambda))
    throw InvalidInputError("augment_rows: total_lambda must be >= 0");
  if (y.size() != x.rows()) throw DimensionMismatchError("augment_rows: response length mismatch");
  Engine eng = make_engine(seed);
  Matrix xa(x.rows() + q, x.cols());
  xa << x, gaussian_matrix(q, x.cols(), std::sqrt(total_lambda / static_cast<double>(q)), eng);
  Vector ya = Vector::Zero(x.rows() + q);
  ya.head(y.size()) = y;
  return Dataset(std::move(xa), std::move(ya));
}

}  // namespace ridgeless
