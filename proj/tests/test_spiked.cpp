#include <cmath>

#include <gtest/gtest.h>

#include "ridgeless/spiked.hpp"
#include "support.hpp"

using namespace ridgeless;
using ridgeless::testing::random_vector;

namespace {

Matrix sigma_of(const SpikedSpec& s) {
  return Matrix::Identity(s.p, s.p) + s.rho * Matrix::Ones(s.p, s.p);
}

}  // namespace

TEST(Beta, SingleCoordinate) {
  const Vector b = beta_of(SpikedSpec{1, 0.0, 1.0, 1.0});
  ASSERT_EQ(b.size(), 1);
  EXPECT_NEAR(b(0), 1.0, 1e-15);
}

TEST(Beta, LargeModelValue) {
  const auto spec = SpikedSpec::defaults(1000);
  const Vector b = beta_of(spec);
  EXPECT_NEAR(b(0), std::sqrt(10.0 / 101000.0), 1e-15);
  EXPECT_NEAR(b(0), 9.9504e-3, 1e-7);
  EXPECT_EQ(b.maxCoeff(), b.minCoeff());
}

TEST(Beta, SignalVarianceMatchesSnrForManySpecs) {
  for (Index p : {1, 2, 7, 50, 200})
    for (double rho : {0.0, 0.1, 0.5, 2.0})
      for (double alpha : {0.5, 1.0, 10.0})
        for (double sigma2 : {0.25, 1.0, 3.0}) {
          const SpikedSpec s{p, rho, alpha, sigma2};
          const Vector b = beta_of(s);
          EXPECT_NEAR(b.dot(sigma_of(s) * b) / sigma2, alpha, 1e-10 * alpha);
          EXPECT_NEAR(s.c() * b.squaredNorm(), rho * static_cast<double>(p), 1e-10 * (1.0 + rho * p));
        }
}

TEST(SpikedSpec, Validation) {
  EXPECT_THROW(beta_of(SpikedSpec{0, 0.1, 10, 1}), InvalidInputError);
  EXPECT_THROW(beta_of(SpikedSpec{5, -0.1, 10, 1}), InvalidInputError);
  EXPECT_THROW(beta_of(SpikedSpec{5, 0.1, 0, 1}), InvalidInputError);
  EXPECT_THROW(beta_of(SpikedSpec{5, 0.1, 10, -1}), InvalidInputError);
}

TEST(SampleTraining, SphericalCovariance) {
  const SpikedSpec s{4, 0.0, 10.0, 1.0};
  const Dataset d = sample_training(s, 100000, 1);
  const Matrix xc = d.x().rowwise() - d.x().colwise().mean();
  const Matrix cov = xc.transpose() * xc / static_cast<double>(d.rows() - 1);
  EXPECT_LE((cov - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 0.05);
}

TEST(SampleTraining, OffDiagonalCovariance) {
  const SpikedSpec s{2, 0.1, 10.0, 1.0};
  const Dataset d = sample_training(s, 100000, 2);
  const Matrix xc = d.x().rowwise() - d.x().colwise().mean();
  const double cov01 = xc.col(0).dot(xc.col(1)) / static_cast<double>(d.rows() - 1);
  EXPECT_NEAR(cov01, 0.1, 0.02);
}

TEST(SampleTraining, MarginalVarianceIsOnePlusRho) {
  const SpikedSpec s{3, 0.3, 10.0, 1.0};
  const Index n = 100000;
  const Dataset d = sample_training(s, n, 3);
  for (Index j = 0; j < s.p; ++j) {
    const Vector c = d.x().col(j);
    const double var = (c.array() - c.mean()).square().sum() / static_cast<double>(n - 1);
    // Var of the sample variance of a Gaussian is 2 sigma^4 / (n - 1).
    const double se = std::sqrt(2.0 / static_cast<double>(n - 1)) * (1.0 + s.rho);
    EXPECT_NEAR(var, 1.0 + s.rho, 3.0 * se);
  }
}

TEST(SampleTraining, NoiselessResponseIsExact) {
  const SpikedSpec s{6, 0.1, 10.0, 0.0};
  const Dataset d = sample_training(s, 20, 5);
  EXPECT_EQ(d.y(), Vector(d.x() * beta_of(s)));
}

TEST(SampleTraining, ResponseNoiseHasVarianceSigma2) {
  const SpikedSpec s{5, 0.1, 10.0, 2.0};
  const Dataset d = sample_training(s, 50000, 4);
  const Vector resid = d.y() - d.x() * beta_of(s);
  EXPECT_NEAR(resid.squaredNorm() / static_cast<double>(resid.size()), 2.0, 0.05);
}

TEST(SampleTraining, DeterministicPerSeed) {
  const auto s = SpikedSpec::defaults(30);
  const Dataset a = sample_training(s, 10, 99), b = sample_training(s, 10, 99), c = sample_training(s, 10, 100);
  EXPECT_EQ(a.x(), b.x());
  EXPECT_EQ(a.y(), b.y());
  EXPECT_NE(a.x(), c.x());
}

TEST(Risk, OracleEstimatorHitsNoiseFloor) {
  const auto s = SpikedSpec::defaults(50);
  const auto r = risk(beta_of(s), s);
  EXPECT_NEAR(r.raw_mse, 1.0, 1e-14);
  EXPECT_NEAR(r.normalized_mse, 1.0 / 11.0, 1e-14);
  EXPECT_NEAR(r.normalized_mse, 0.09, 0.005);
}

TEST(Risk, NullEstimatorPredictsResponseVariance) {
  const SpikedSpec s{40, 0.2, 3.0, 1.5};
  const auto r = risk(Vector::Zero(40), s);
  EXPECT_NEAR(r.raw_mse, 3.0 * 1.5 + 1.5, 1e-12);
  EXPECT_NEAR(r.normalized_mse, 1.0, 1e-12);
}

TEST(Risk, MatchesMaterializedCovariance) {
  for (Index p : {1, 3, 20, 200}) {
    const SpikedSpec s{p, 0.1, 10.0, 1.0};
    for (int t = 0; t < 5; ++t) {
      const Vector b_hat = random_vector(p, 100 * static_cast<std::uint64_t>(p) + t);
      const Vector d = b_hat - beta_of(s);
      const double explicit_risk = d.dot(sigma_of(s) * d) + s.sigma2;
      EXPECT_NEAR(risk(b_hat, s).raw_mse, explicit_risk, 1e-10 * explicit_risk);
    }
  }
}

TEST(Risk, NeverBelowOracleFloor) {
  const SpikedSpec s{25, 0.1, 10.0, 1.0};
  for (int t = 0; t < 200; ++t) {
    const Vector b_hat = beta_of(s) + 1e-3 * t * random_vector(25, 700 + t);
    EXPECT_GE(risk(b_hat, s).normalized_mse, 1.0 / 11.0 - 1e-15);
  }
}

TEST(Risk, RejectsWrongLength) {
  EXPECT_THROW(risk(Vector::Zero(3), SpikedSpec::defaults(4)), DimensionMismatchError);
}

TEST(SphericalLambdaOpt, Values) {
  SpikedSpec s{50, 0.0, 10.0, 1.0};
  EXPECT_NEAR(spherical_lambda_opt(s), 5.0, 1e-12);
  s.p = 1000;
  EXPECT_NEAR(spherical_lambda_opt(s), 100.0, 1e-10);
  s = SpikedSpec{37, 0.0, 37.0, 2.0};
  EXPECT_NEAR(spherical_lambda_opt(s), 1.0, 1e-12);
}

TEST(SphericalLambdaOpt, RequiresSphericalModel) {
  EXPECT_THROW(spherical_lambda_opt(SpikedSpec::defaults(50)), NotApplicableError);
}
