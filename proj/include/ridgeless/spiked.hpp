#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "ridgeless/linalg.hpp"
#include "ridgeless/random.hpp"

namespace ridgeless {

/// Gaussian predictors with covariance I + rho 11' and a response
/// y = x'beta + eps, beta = (b, ..., b), scaled so that Var[x'beta] = alpha sigma^2.
struct SpikedSpec {
  Index p = 50;
  double rho = 0.1;
  double alpha = 10.0;
  double sigma2 = 1.0;

  /// sigma^2 = 1, rho = 0.1, alpha = 10.
  static SpikedSpec defaults(Index p) { return SpikedSpec{p, 0.1, 10.0, 1.0}; }

  void validate() const {
    if (p < 1) throw InvalidInputError("SpikedSpec: p must be >= 1");
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw InvalidInputError("SpikedSpec: rho must be >= 0");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidInputError("SpikedSpec: alpha must be > 0");
    if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw InvalidInputError("SpikedSpec: sigma2 must be >= 0");
  }

  double b() const {
    const double pd = static_cast<double>(p);
    return std::sqrt(sigma2) * std::sqrt(alpha / (pd + pd * pd * rho));
  }

  double beta_norm_sq() const { return static_cast<double>(p) * b() * b(); }

  /// c in Sigma = I + c beta beta'.
  double c() const { return rho * static_cast<double>(p) / beta_norm_sq(); }

  /// Var[y] = (alpha + 1) sigma^2.
  double response_variance() const { return (alpha + 1.0) * sigma2; }
};

inline Vector beta_of(const SpikedSpec& spec) {
  spec.validate();
  return Vector::Constant(spec.p, spec.b());
}

/// Draws n rows x = z + sqrt(rho) g 1 with z ~ N(0, I_p), g ~ N(0, 1), which is
/// exactly N(0, I + rho 11'), then y = X beta + eps. Draw order: per row g then z,
/// then all noise terms.
inline Dataset sample_training(const SpikedSpec& spec, Index n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw InvalidInputError("sample_training: n must be >= 1");
  Engine eng = make_engine(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  const double root_rho = std::sqrt(spec.rho);
  Matrix x(n, spec.p);
  for (Index i = 0; i < n; ++i) {
    const double g = root_rho * dist(eng);
    for (Index j = 0; j < spec.p; ++j) x(i, j) = dist(eng) + g;
  }
  const double sigma = std::sqrt(spec.sigma2);
  Vector y = x * beta_of(spec);
  for (Index i = 0; i < n; ++i) y(i) += sigma * dist(eng);
  return Dataset(std::move(x), std::move(y));
}

struct RiskValue {
  double raw_mse = 0.0;
  double normalized_mse = 0.0;
};

/// Exact prediction risk (b - beta)' Sigma (b - beta) + sigma^2 without forming Sigma.
inline RiskValue risk(const Vector& beta_hat, const SpikedSpec& spec) {
  spec.validate();
  if (beta_hat.size() != spec.p) throw DimensionMismatchError("risk: coefficient length differs from p");
  const Vector d = beta_hat - beta_of(spec);
  const double s = d.sum();
  RiskValue r;
  r.raw_mse = d.squaredNorm() + spec.rho * s * s + spec.sigma2;
  const double var_y = spec.response_variance();
  r.normalized_mse = var_y > 0.0 ? r.raw_mse / var_y : std::numeric_limits<double>::quiet_NaN();
  return r;
}

/// p sigma^2 / ||beta||^2, which reduces to p / alpha for rho = 0.
inline double spherical_lambda_opt(const SpikedSpec& spec) {
  spec.validate();
  if (spec.rho != 0.0)
    throw NotApplicableError("spherical_lambda_opt: only defined for rho = 0 (got " + std::to_string(spec.rho) + ")");
  return static_cast<double>(spec.p) * spec.sigma2 / spec.beta_norm_sq();
}

}  // namespace ridgeless
