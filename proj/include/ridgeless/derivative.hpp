#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "ridgeless/linalg.hpp"
#include "ridgeless/parallel.hpp"
#include "ridgeless/random.hpp"
#include "ridgeless/spiked.hpp"

namespace ridgeless {

namespace detail {

inline void require_full_effective_rank(const SvdFactorization& svd, const char* who) {
  if (svd.effective_rank() < svd.rank())
    throw RankDeficiencyError(std::string(who) + ": design has a zero singular value within tolerance");
}

struct MeanSe {
  double mean = 0.0;
  double se = std::numeric_limits<double>::quiet_NaN();
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe r;
  if (xs.empty()) {
    r.mean = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  double sum = 0.0;
  for (double x : xs) sum += x;
  r.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return r;
}

}  // namespace detail

/// beta' V diag(s^{-2k}) V' beta for k = 0..k_max on a single design.
inline std::vector<double> projection_moments(const SvdFactorization& svd, const Vector& beta, int k_max) {
  if (beta.size() != svd.v.rows()) throw DimensionMismatchError("projection_moments: beta length differs from p");
  if (k_max < 0) throw InvalidInputError("projection_moments: k_max must be >= 0");
  detail::require_full_effective_rank(svd, "projection_moments");
  const Vector vb = svd.v.transpose() * beta;
  const Vector inv_s2 = svd.s.array().square().inverse();
  std::vector<double> out;
  Vector weight = Vector::Ones(svd.rank());
  for (int k = 0; k <= k_max; ++k) {
    out.push_back((vb.array().square() * weight.array()).sum());
    weight = weight.cwiseProduct(inv_s2);
  }
  return out;
}

inline std::vector<double> projection_moments(const Matrix& x, const Vector& beta, int k_max) {
  return projection_moments(thin_svd(x), beta, k_max);
}

/// Sum of s_i^{-4} over the min(n, p) singular values.
inline double trace_s4(const SvdFactorization& svd) {
  detail::require_full_effective_rank(svd, "trace_s4");
  return svd.s.array().pow(-4.0).sum();
}

inline double trace_s4(const Matrix& x) { return trace_s4(thin_svd(x)); }

/// The four addends of the lambda -> 0+ risk derivative for one design:
///   2c||beta||^2 P1,  -2c P0 P1,  -2 sigma^2 Tr(S^-4),  -2c sigma^2 P2.
inline std::array<double, 4> derivative_terms(const SvdFactorization& svd, const SpikedSpec& spec) {
  const Vector beta = beta_of(spec);
  const auto m = projection_moments(svd, beta, 2);
  const double c = spec.c();
  return {2.0 * c * beta.squaredNorm() * m[1], -2.0 * c * m[0] * m[1], -2.0 * spec.sigma2 * trace_s4(svd),
          -2.0 * c * spec.sigma2 * m[2]};
}

/// Risk of the ridge estimate averaged over the noise for a fixed design:
/// m' Sigma m + sigma^2 sum_i f_i^2 v_i' Sigma v_i + sigma^2 with f_i = s_i/(s_i^2+lambda)
/// and m = V diag(f s) V' beta - beta.
inline double conditional_risk(const SvdFactorization& svd, const SpikedSpec& spec, double lambda) {
  if (!penalty_admissible(lambda, svd.smin_sq()))
    throw SingularPenaltyError("conditional_risk: lambda at or below -s_min^2");
  const Vector beta = beta_of(spec);
  const Index k = svd.effective_rank();
  const Matrix v = svd.v.leftCols(k);
  const Eigen::ArrayXd s = svd.s.head(k).array();
  const Eigen::ArrayXd f = s / (s.square() + lambda);
  const Vector mean_dev = v * ((f * s).matrix().cwiseProduct(v.transpose() * beta)) - beta;
  const double dsum = mean_dev.sum();
  const Eigen::ArrayXd v1 = (v.transpose() * Vector::Ones(spec.p)).array();
  const double noise = spec.sigma2 * (f.square() * (1.0 + spec.rho * v1.square())).sum();
  return mean_dev.squaredNorm() + spec.rho * dsum * dsum + noise + spec.sigma2;
}

struct DerivativeEstimate {
  double value = 0.0;    // sum of `terms`
  double std_err = 0.0;  // of the replicate-level derivatives
  std::array<double, 4> terms{};
  Index n_rep = 0;
  /// Same expansion with E[P0] E[P1] in place of E[P0 P1].
  double value_decoupled = 0.0;
};

/// Monte-Carlo estimate of d/dlambda E R(beta_lambda) at lambda = 0+ from the
/// projection moments of n_rep sampled designs. Designs come from the same
/// substreams as every other experiment seeded with `seed`.
inline DerivativeEstimate derivative_at_zero(const SpikedSpec& spec, Index n, Index n_rep, std::uint64_t seed,
                                             unsigned threads = 1) {
  if (n_rep < 1) throw InvalidInputError("derivative_at_zero: n_rep must be >= 1");
  struct Rep {
    std::array<double, 4> terms;
    double p0, p1;
  };
  const Vector beta = beta_of(spec);
  auto reps = parallel_map(static_cast<std::size_t>(n_rep), threads, [&](std::size_t r) {
    const Dataset data = sample_training(spec, n, substream(seed, StreamTag::Training, r));
    const SvdFactorization svd = thin_svd(data.x());
    const auto m = projection_moments(svd, beta, 1);
    return Rep{derivative_terms(svd, spec), m[0], m[1]};
  });

  DerivativeEstimate est;
  est.n_rep = n_rep;
  std::vector<double> per_rep;
  per_rep.reserve(reps.size());
  double p0 = 0.0, p1 = 0.0;
  for (const auto& rep : reps) {
    for (int t = 0; t < 4; ++t) est.terms[t] += rep.terms[t];
    per_rep.push_back(rep.terms[0] + rep.terms[1] + rep.terms[2] + rep.terms[3]);
    p0 += rep.p0;
    p1 += rep.p1;
  }
  const double inv = 1.0 / static_cast<double>(n_rep);
  for (auto& t : est.terms) t *= inv;
  est.value = est.terms[0] + est.terms[1] + est.terms[2] + est.terms[3];
  est.std_err = detail::mean_se(per_rep).se;
  const double c = spec.c();
  est.value_decoupled = est.terms[0] - 2.0 * c * (p0 * inv) * (p1 * inv) + est.terms[2] + est.terms[3];
  return est;
}

struct FiniteDifferenceEstimate {
  double value = 0.0;
  double std_err = 0.0;
  double eps = 0.0;
  Index used = 0;
  Index excluded = 0;  // replicates with -eps at or below -s_min^2
};

/// Central difference (E R(beta_{+eps}) - E R(beta_{-eps})) / (2 eps) on raw
/// risk, with the same sampled (X, y) at both penalties. Without `eps` the step
/// is 1e-3 times the median s_min^2 over replicates.
inline FiniteDifferenceEstimate derivative_fd_oracle(const SpikedSpec& spec, Index n, Index n_rep,
                                                     std::optional<double> eps, std::uint64_t seed,
                                                     unsigned threads = 1) {
  if (n_rep < 1) throw InvalidInputError("derivative_fd_oracle: n_rep must be >= 1");
  if (eps && !(*eps > 0.0)) throw InvalidInputError("derivative_fd_oracle: eps must be > 0");
  auto paths = parallel_map(static_cast<std::size_t>(n_rep), threads, [&](std::size_t r) {
    const Dataset data = sample_training(spec, n, substream(seed, StreamTag::Training, r));
    return RidgePath(thin_svd(data.x()), data.y());
  });

  FiniteDifferenceEstimate est;
  if (eps) {
    est.eps = *eps;
  } else {
    std::vector<double> smin;
    for (const auto& p : paths) smin.push_back(p.smin_sq());
    std::sort(smin.begin(), smin.end());
    const std::size_t m = smin.size();
    const double median = m % 2 ? smin[m / 2] : 0.5 * (smin[m / 2 - 1] + smin[m / 2]);
    est.eps = 1e-3 * median;
  }

  std::vector<double> diffs;
  for (const auto& path : paths) {
    if (!path.admissible(-est.eps)) {
      ++est.excluded;
      continue;
    }
    const double up = risk(path.coefficients(est.eps), spec).raw_mse;
    const double down = risk(path.coefficients(-est.eps), spec).raw_mse;
    diffs.push_back((up - down) / (2.0 * est.eps));
  }
  est.used = static_cast<Index>(diffs.size());
  const auto ms = detail::mean_se(diffs);
  est.value = ms.mean;
  est.std_err = ms.se;
  return est;
}

struct SignChangeRow {
  Index p = 0;
  double derivative = 0.0;
  double std_err = 0.0;
};

struct SignChangeScan {
  std::vector<SignChangeRow> rows;
  /// Smallest grid p whose derivative exceeds +2 standard errors.
  std::optional<Index> crossing_p;
};

/// Seed used for grid point p so that a scan row reproduces a standalone
/// derivative_at_zero call.
inline std::uint64_t scan_seed(std::uint64_t seed, Index p) { return substream(seed, {0x5ca9ULL, static_cast<std::uint64_t>(p)}); }

inline SignChangeScan sign_change_scan(const SpikedSpec& base, const std::vector<Index>& p_grid, Index n, Index n_rep,
                                       std::uint64_t seed, unsigned threads = 1) {
  if (!std::is_sorted(p_grid.begin(), p_grid.end()) ||
      std::adjacent_find(p_grid.begin(), p_grid.end()) != p_grid.end())
    throw InvalidInputError("sign_change_scan: p grid must be strictly ascending");
  SignChangeScan scan;
  for (Index p : p_grid) {
    SpikedSpec spec = base;
    spec.p = p;
    const auto est = derivative_at_zero(spec, n, n_rep, scan_seed(seed, p), threads);
    scan.rows.push_back({p, est.value, est.std_err});
    if (!scan.crossing_p && est.value > 2.0 * est.std_err) scan.crossing_p = p;
  }
  return scan;
}

}  // namespace ridgeless
