#include <cmath>

#include <gtest/gtest.h>

#include "ridgeless/linalg.hpp"
#include "support.hpp"

using namespace ridgeless;
using ridgeless::testing::null_space;
using ridgeless::testing::pinv;
using ridgeless::testing::random_matrix;
using ridgeless::testing::random_vector;
using ridgeless::testing::rel_err;

TEST(ThinSvd, IdentityHasUnitSingularValues) {
  const auto svd = thin_svd(Matrix::Identity(2, 2));
  EXPECT_NEAR(svd.s(0), 1.0, 1e-15);
  EXPECT_NEAR(svd.s(1), 1.0, 1e-15);
  EXPECT_NEAR((svd.u.cwiseAbs() - Matrix::Identity(2, 2)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((svd.v.cwiseAbs() - Matrix::Identity(2, 2)).norm(), 0.0, 1e-12);
}

TEST(ThinSvd, KeepsZeroSingularValue) {
  Matrix x(2, 2);
  x << 3, 0, 0, 0;
  const auto svd = thin_svd(x);
  ASSERT_EQ(svd.rank(), 2);
  EXPECT_NEAR(svd.s(0), 3.0, 1e-14);
  EXPECT_EQ(svd.s(1), 0.0);
  EXPECT_EQ(svd.effective_rank(), 1);
  EXPECT_NEAR(svd.smin_sq(), 9.0, 1e-12);
}

TEST(ThinSvd, ReconstructsAndIsOrthonormal) {
  for (auto [n, p] : {std::pair<Index, Index>{5, 8}, {8, 5}, {30, 30}, {3, 200}}) {
    const Matrix x = random_matrix(n, p, 100 + static_cast<std::uint64_t>(n * p));
    const auto svd = thin_svd(x);
    const Index r = std::min(n, p);
    ASSERT_EQ(svd.rank(), r);
    const Matrix rebuilt = svd.u * svd.s.asDiagonal() * svd.v.transpose();
    EXPECT_LE((x - rebuilt).norm() / x.norm(), 1e-10);
    EXPECT_LE((svd.u.transpose() * svd.u - Matrix::Identity(r, r)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((svd.v.transpose() * svd.v - Matrix::Identity(r, r)).cwiseAbs().maxCoeff(), 1e-10);
    for (Index i = 0; i + 1 < r; ++i) EXPECT_GE(svd.s(i), svd.s(i + 1));
    EXPECT_GE(svd.s.minCoeff(), 0.0);
  }
}

TEST(ThinSvd, RejectsNonFinite) {
  Matrix x = Matrix::Ones(2, 2);
  x(0, 1) = std::nan("");
  EXPECT_THROW(thin_svd(x), InvalidInputError);
}

TEST(RidgePath, IdentityDesign) {
  const Vector y = (Vector(2) << 1, 2).finished();
  const auto svd = thin_svd(Matrix::Identity(2, 2));
  EXPECT_LE((ridge_path(svd, y, 0.0) - y).norm(), 1e-14);
  EXPECT_LE((ridge_path(svd, y, 1.0) - Vector((Vector(2) << 0.5, 1.0).finished())).norm(), 1e-14);
}

TEST(RidgePath, MatchesNormalEquationsOnWideDesign) {
  const Matrix x = random_matrix(4, 10, 1);
  const Vector y = random_vector(4, 2);
  EXPECT_LE(rel_err(ridge_path(thin_svd(x), y, 0.7), ridge_direct(x, y, 0.7)), 1e-8);
}

TEST(RidgePath, RejectsPenaltyAtDivergence) {
  const Matrix x = random_matrix(20, 5, 3);
  const Vector y = random_vector(20, 4);
  const RidgePath path(thin_svd(x), y);
  const double s2 = path.smin_sq();
  EXPECT_THROW(path.coefficients(-s2), SingularPenaltyError);
  EXPECT_THROW(path.coefficients(-2.0 * s2), SingularPenaltyError);
  EXPECT_THROW(path.coefficients(-s2 * (1.0 - 1e-7)), SingularPenaltyError);
  EXPECT_NO_THROW(path.coefficients(-s2 * (1.0 - 1e-5)));
}

TEST(RidgePath, AgreesWithDirectSolveOnRandomConfigurations) {
  Engine eng = make_engine(42);
  std::uniform_int_distribution<Index> dim(2, 40);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  int negatives = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = dim(eng), p = dim(eng);
    const Matrix x = random_matrix(n, p, 1000 + trial);
    const Vector y = random_vector(n, 5000 + trial);
    const auto svd = thin_svd(x);
    const double s2 = svd.smin_sq();
    // Half the draws are negative down to -0.9 s_min^2. When p > n the
    // direct system has p - n eigenvalues equal to lambda, so |lambda| is kept
    // away from zero to keep the oracle itself well conditioned.
    double lambda;
    if (trial % 2 == 0) {
      lambda = -s2 * (0.01 + 0.89 * unit(eng));
      ++negatives;
    } else {
      lambda = s2 * std::pow(10.0, -2.0 + 4.0 * unit(eng));
    }
    if (trial == 1) lambda = -0.9 * s2;
    const double e = rel_err(ridge_path(svd, y, lambda), ridge_direct(x, y, lambda));
    worst = std::max(worst, e);
    EXPECT_LE(e, 1e-8) << "n=" << n << " p=" << p << " lambda=" << lambda;
  }
  EXPECT_GE(negatives, 100);
  RecordProperty("worst_rel_err", std::to_string(worst));
}

TEST(RidgePath, SmallPenaltyApproachesMinimumNorm) {
  for (int t = 0; t < 20; ++t) {
    const Matrix x = random_matrix(6 + t, 30 + 2 * t, 7000 + t);
    const Vector y = random_vector(6 + t, 8000 + t);
    EXPECT_LE(rel_err(ridge_path(thin_svd(x), y, 1e-10), min_norm_ols(x, y)), 1e-6);
  }
}

TEST(RidgePath, ShrinkageIsMonotoneOnIdentityDesign) {
  const Vector y = random_vector(6, 11);
  const auto svd = thin_svd(Matrix::Identity(6, 6));
  Vector prev = ridge_path(svd, y, 0.0);
  for (double l = 0.1; l < 100.0; l *= 1.5) {
    const Vector cur = ridge_path(svd, y, l);
    for (Index i = 0; i < 6; ++i) EXPECT_LE(std::abs(cur(i)), std::abs(prev(i)) + 1e-15);
    prev = cur;
  }
}

TEST(MinNormOls, SingleRowPicksSmallestNorm) {
  Matrix x(1, 2);
  x << 1, 0;
  const Vector b = min_norm_ols(x, Vector::Constant(1, 2.0));
  EXPECT_NEAR(b(0), 2.0, 1e-14);
  EXPECT_NEAR(b(1), 0.0, 1e-14);
}

TEST(MinNormOls, IdentityReturnsResponse) {
  EXPECT_LE((min_norm_ols(Matrix::Identity(3, 3), Vector::Ones(3)) - Vector::Ones(3)).norm(), 1e-14);
}

TEST(MinNormOls, MatchesPseudoinverse) {
  const Matrix x = random_matrix(7, 19, 12);
  const Vector y = random_vector(7, 13);
  EXPECT_LE(rel_err(min_norm_ols(x, y), pinv(x) * y), 1e-10);
}

TEST(MinNormOls, EqualsOrdinaryLeastSquaresWhenTall) {
  const Matrix x = random_matrix(30, 6, 14);
  const Vector y = random_vector(30, 15);
  const Vector ols = (x.transpose() * x).ldlt().solve(x.transpose() * y);
  EXPECT_LE(rel_err(min_norm_ols(x, y), ols), 1e-10);
  EXPECT_LE(rel_err(ridge_direct(x, y, 0.0), ols), 1e-10);
}

TEST(MinNormOls, InterpolatesAndHasMinimumNormOnRandomWideDesigns) {
  Engine eng = make_engine(77);
  std::uniform_int_distribution<Index> rows(1, 30);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = rows(eng);
    const Index p = n + 1 + rows(eng);
    const Matrix x = random_matrix(n, p, 20000 + trial);
    const Vector y = random_vector(n, 30000 + trial);
    const Vector b = min_norm_ols(x, y);
    EXPECT_LE((y - x * b).norm() / y.norm(), 1e-8);

    const Matrix null = null_space(x);
    ASSERT_EQ(null.cols(), p - n);
    EXPECT_LE((null.transpose() * b).norm(), 1e-8 * b.norm());
    for (int k = 0; k < 10; ++k) {
      const Vector w = null * random_vector(null.cols(), 40000 + 10 * trial + k);
      EXPECT_LE(b.norm(), (b + w).norm());
      EXPECT_LE((y - x * (b + w)).norm() / y.norm(), 1e-8);
    }
  }
}

TEST(MinNormOls, DominatesHundredNullSpacePerturbations) {
  const Matrix x = random_matrix(3, 6, 16);
  const Vector y = random_vector(3, 17);
  const Vector b = min_norm_ols(x, y);
  const Matrix null = null_space(x);
  for (int k = 0; k < 100; ++k) EXPECT_LE(b.norm(), (b + null * random_vector(3, 500 + k)).norm());
}

TEST(RidgeDirect, IdentityExample) {
  const Vector b = ridge_direct(Matrix::Identity(2, 2), (Vector(2) << 1, 2).finished(), 1.0);
  EXPECT_NEAR(b(0), 0.5, 1e-15);
  EXPECT_NEAR(b(1), 1.0, 1e-15);
}

TEST(RidgeDirect, NegativePenaltyOnTallDesign) {
  const Matrix x = random_matrix(20, 5, 18);
  const Vector y = random_vector(20, 19);
  const auto svd = thin_svd(x);
  const double lambda = -0.5 * svd.smin_sq();
  const Vector direct = ridge_direct(x, y, lambda);
  EXPECT_TRUE(direct.allFinite());
  EXPECT_LE(rel_err(ridge_path(svd, y, lambda), direct), 1e-8);
}

TEST(RidgeDirect, SingularSystemThrows) {
  Matrix x(1, 2);
  x << 1, 0;
  EXPECT_THROW(ridge_direct(x, Vector::Ones(1), 0.0), SingularPenaltyError);
}

TEST(Dataset, ValidatesShapeAndValues) {
  EXPECT_THROW(Dataset(Matrix::Ones(3, 2), Vector::Ones(2)), DimensionMismatchError);
  Matrix x = Matrix::Ones(2, 2);
  x(1, 1) = INFINITY;
  EXPECT_THROW(Dataset(x, Vector::Ones(2)), InvalidInputError);
  EXPECT_THROW(Dataset(Matrix(0, 2), Vector(0)), InvalidInputError);
}

TEST(FitWithIntercept, ConstantResponse) {
  const Dataset d(random_matrix(10, 4, 20), Vector::Constant(10, 5.0));
  const auto fit = fit_with_intercept(d, 0.3);
  EXPECT_LE(fit.coefficients.norm(), 1e-12);
  EXPECT_NEAR(fit.intercept, 5.0, 1e-12);
}

TEST(FitWithIntercept, PreCenteredDataHasZeroIntercept) {
  Matrix x = random_matrix(12, 20, 21);
  x = x.rowwise() - x.colwise().mean();
  Vector y = random_vector(12, 22);
  y.array() -= y.mean();
  const auto fit = fit_with_intercept(Dataset(x, y), 0.5);
  EXPECT_NEAR(fit.intercept, 0.0, 1e-12);
  EXPECT_LE(rel_err(fit.coefficients, ridge_path(thin_svd(x), y, 0.5)), 1e-10);
}

TEST(FitWithIntercept, ShiftEquivariance) {
  const Matrix x = random_matrix(15, 8, 23);
  const Vector y = random_vector(15, 24);
  const Vector c = random_vector(8, 25);
  const double d = 3.7;
  const auto base = fit_with_intercept(Dataset(x, y), 0.2);
  const Matrix xs = x.rowwise() + c.transpose();
  const auto shifted = fit_with_intercept(Dataset(xs, y.array() + d), 0.2);
  EXPECT_LE(rel_err(shifted.coefficients, base.coefficients), 1e-10);
  EXPECT_NEAR(shifted.intercept, base.intercept + d - c.dot(base.coefficients), 1e-10);
}

TEST(FitWithIntercept, PredictsMeanResponseAtMeanPredictor) {
  const Matrix x = random_matrix(9, 30, 26);
  const Vector y = random_vector(9, 27);
  const auto fit = fit_with_intercept(Dataset(x, y), -0.1);
  const Matrix mean_row = x.colwise().mean();
  EXPECT_NEAR(predict(fit, mean_row)(0), y.mean(), 1e-12);
}

TEST(Predict, ZeroCoefficientsGiveIntercept) {
  RidgeFit fit;
  fit.coefficients = Vector::Zero(3);
  fit.intercept = 3.0;
  EXPECT_LE((predict(fit, random_matrix(4, 3, 28)) - Vector::Constant(4, 3.0)).norm(), 1e-15);
}

TEST(Predict, InterpolatesIdentityDesign) {
  RidgeFit fit;
  fit.coefficients = ridge_path(thin_svd(Matrix::Identity(2, 2)), (Vector(2) << 1, 2).finished(), 0.0);
  EXPECT_LE((predict(fit, Matrix::Identity(2, 2)) - Vector((Vector(2) << 1, 2).finished())).norm(), 1e-14);
}

TEST(Predict, InterpolatesTrainingDataWhenWide) {
  const Matrix x = random_matrix(10, 40, 29);
  const Vector y = random_vector(10, 30);
  const auto fit = fit_with_intercept(Dataset(x, y), 0.0);
  EXPECT_LE((predict(fit, x) - y).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Predict, RejectsWrongWidth) {
  RidgeFit fit;
  fit.coefficients = Vector::Zero(3);
  EXPECT_THROW(predict(fit, Matrix::Zero(2, 4)), DimensionMismatchError);
}

TEST(KernelPredict, IdentityKernelReturnsFirstResponse) {
  const Vector y = random_vector(5, 31);
  EXPECT_NEAR(kernel_min_norm_predict(Matrix::Identity(5, 5), Vector::Unit(5, 0), y), y(0), 1e-15);
}

TEST(KernelPredict, ScaledIdentity) {
  Vector y = Vector::Ones(3);
  y(0) = 4.0;
  EXPECT_NEAR(kernel_min_norm_predict(2.0 * Matrix::Identity(3, 3), Vector::Unit(3, 0), y), 2.0, 1e-15);
}

TEST(KernelPredict, LinearKernelMatchesPrimalMinimumNorm) {
  const Matrix x = random_matrix(8, 25, 32);
  const Vector y = random_vector(8, 33);
  const Vector x_test = random_vector(25, 34);
  const Matrix k = x * x.transpose();
  const double dual = kernel_min_norm_predict(0.5 * (k + k.transpose()), x * x_test, y);
  const double primal = x_test.dot(min_norm_ols(x, y));
  EXPECT_NEAR(dual, primal, 1e-8 * std::max(1.0, std::abs(primal)));
}

TEST(KernelPredict, SingularKernelThrows) {
  const Matrix x = random_matrix(2, 5, 35);
  Matrix k = Matrix::Zero(3, 3);
  k.topLeftCorner(2, 2) = x * x.transpose();
  EXPECT_THROW(kernel_min_norm_predict(k, Vector::Ones(3), Vector::Ones(3)), SingularKernelError);
}

TEST(GradientDescent, ConvergesOnIdentity) {
  const Vector y = (Vector(2) << 1, 2).finished();
  GradientDescentOptions opts;
  opts.step = 0.5;
  const auto res = gradient_descent_ols(Matrix::Identity(2, 2), y, opts);
  EXPECT_TRUE(res.converged);
  EXPECT_LE((res.coefficients - y).norm(), 1e-9);
}

TEST(GradientDescent, FirstStepIsScaledGradient) {
  const Matrix x = random_matrix(4, 6, 36);
  const Vector y = random_vector(4, 37);
  EXPECT_LE((gradient_descent_ols(x, y, 0.01, 1) - 0.01 * x.transpose() * y).norm(), 1e-15);
}

TEST(GradientDescent, ConvergesToMinimumNormWithinRowSpace) {
  const Matrix x = random_matrix(4, 12, 38);
  const Vector y = random_vector(4, 39);
  const auto svd = thin_svd(x);
  const Matrix& v = svd.v;
  double worst_leak = 0.0;
  GradientDescentOptions opts;
  opts.step = 1.0 / (svd.s(0) * svd.s(0));
  opts.max_iters = 100000;
  const auto res = gradient_descent_ols(x, y, opts, [&](long it, const Vector& b) {
    if (it % 100 == 1) worst_leak = std::max(worst_leak, (b - v * (v.transpose() * b)).norm() / b.norm());
  });
  EXPECT_TRUE(res.converged);
  EXPECT_LE(worst_leak, 1e-8);
  EXPECT_LE(rel_err(res.coefficients, min_norm_ols(x, y)), 1e-6);
  EXPECT_LE(rel_err(gradient_descent_ols(x, y, *opts.step, 100000), min_norm_ols(x, y)), 1e-6);
}

TEST(GradientDescent, DefaultStepConverges) {
  const Matrix x = random_matrix(5, 9, 40);
  const Vector y = random_vector(5, 41);
  const auto res = gradient_descent_ols(x, y);
  EXPECT_TRUE(res.converged);
  EXPECT_LE(rel_err(res.coefficients, min_norm_ols(x, y)), 1e-6);
}

TEST(GradientDescent, DivergentStepThrows) {
  const Matrix x = random_matrix(4, 6, 42);
  const double smax = thin_svd(x).s(0);
  EXPECT_THROW(gradient_descent_ols(x, random_vector(4, 43), 3.0 / (smax * smax), 100000), StepTooLargeError);
}
