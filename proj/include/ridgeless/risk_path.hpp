#pragma once

#include <optional>

#include "ridgeless/linalg.hpp"
#include "ridgeless/spiked.hpp"

namespace ridgeless {

/// One training set's risk as a function of the ridge penalty.
///
/// Every risk used here is a quadratic form in the spectral coefficients
/// w(lambda) = s / (s^2 + lambda) * U'y of a single SVD:
///
///     risk(lambda) = (c0 + 2 a'w + w'Q w) / scale
///
/// so a whole lambda grid, or a line search, costs O(r^2) per evaluation after
/// one factorization. The factories below build (Q, a, c0) for the spiked-model
/// oracle and for an empirical test set.
class QuadraticRiskPath {
 public:
  QuadraticRiskPath() = default;

  QuadraticRiskPath(const RidgePath& path, Matrix quad, Vector lin, double constant, double scale)
      : s_(path.svd().s), uty_(path.projected_response()), active_(path.svd().effective_rank()),
        smin_sq_(path.smin_sq()), quad_(std::move(quad)), lin_(std::move(lin)), constant_(constant), scale_(scale) {
    if (quad_.rows() != s_.size() || quad_.cols() != s_.size() || lin_.size() != s_.size())
      throw DimensionMismatchError("QuadraticRiskPath: form size differs from rank");
  }

  double smin_sq() const noexcept { return smin_sq_; }
  bool admissible(double lambda) const noexcept { return active_ == 0 || penalty_admissible(lambda, smin_sq_); }

  Vector weights(double lambda) const {
    Vector w = Vector::Zero(s_.size());
    for (Index i = 0; i < active_; ++i) w(i) = s_(i) / (s_(i) * s_(i) + lambda) * uty_(i);
    return w;
  }

  /// Risk at lambda, or nothing when lambda is outside (-s_min^2, inf).
  std::optional<double> at(double lambda) const {
    if (!admissible(lambda)) return std::nullopt;
    const Vector w = weights(lambda);
    return (constant_ + 2.0 * lin_.dot(w) + w.dot(quad_ * w)) / scale_;
  }

 private:
  Vector s_;
  Vector uty_;
  Index active_ = 0;
  double smin_sq_ = 0.0;
  Matrix quad_;
  Vector lin_;
  double constant_ = 0.0;
  double scale_ = 1.0;
};

namespace detail {

/// Spiked-model form for an estimate B w, where B (p x r) maps spectral
/// coefficients to the first p regression coefficients and gram = B'B.
inline QuadraticRiskPath spiked_form(const RidgePath& path, const SpikedSpec& spec, const Matrix& basis,
                                     Matrix gram) {
  const Vector beta = beta_of(spec);
  const double beta_sum = beta.sum();
  const Vector b1 = basis.transpose() * Vector::Ones(spec.p);
  const Vector bb = basis.transpose() * beta;
  gram.noalias() += spec.rho * b1 * b1.transpose();
  Vector lin = -(bb + spec.rho * beta_sum * b1);
  const double c0 = beta.squaredNorm() + spec.rho * beta_sum * beta_sum + spec.sigma2;
  return QuadraticRiskPath(path, std::move(gram), std::move(lin), c0, spec.response_variance());
}

}  // namespace detail

/// Normalized spiked-model risk of the plain ridge path (V has orthonormal columns).
inline QuadraticRiskPath spiked_risk_path(const RidgePath& path, const SpikedSpec& spec) {
  if (path.svd().v.rows() != spec.p) throw DimensionMismatchError("spiked_risk_path: design has wrong width");
  const Index r = path.svd().rank();
  return detail::spiked_form(path, spec, path.svd().v, Matrix::Identity(r, r));
}

/// Normalized risk for a ridge path fitted on [X | X_q]. With `full_model`
/// false, only the first p coefficients are used (truncated estimator). With
/// `full_model` true, test points carry q fresh random entries of variance
/// `tail_variance` and the tail coefficients contribute
/// tail_variance * ||beta_tail||^2 in expectation.
inline QuadraticRiskPath augmented_risk_path(const RidgePath& path, const SpikedSpec& spec, double tail_variance,
                                             bool full_model) {
  const Matrix& v = path.svd().v;
  if (v.rows() < spec.p) throw DimensionMismatchError("augmented_risk_path: design narrower than p");
  const Matrix head = v.topRows(spec.p);
  Matrix gram = head.transpose() * head;
  if (full_model && v.rows() > spec.p) {
    const Matrix tail = v.bottomRows(v.rows() - spec.p);
    gram.noalias() += tail_variance * (tail.transpose() * tail);
  }
  return detail::spiked_form(path, spec, head, std::move(gram));
}

/// Mean squared test error of predictions offset + A w, where A = X_test V
/// (test rows already centered by the training means) and `target` holds the
/// centered test responses.
inline QuadraticRiskPath empirical_risk_path(const RidgePath& path, const Matrix& test_times_v, const Vector& target) {
  if (test_times_v.rows() != target.size() || test_times_v.cols() != path.svd().rank())
    throw DimensionMismatchError("empirical_risk_path: inconsistent test matrix");
  Matrix quad = test_times_v.transpose() * test_times_v;
  Vector lin = -(test_times_v.transpose() * target);
  return QuadraticRiskPath(path, std::move(quad), std::move(lin), target.squaredNorm(),
                           static_cast<double>(target.size()));
}

}  // namespace ridgeless
