#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "ridgeless/random.hpp"

namespace ridgeless::testing {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Engine eng = make_engine(seed);
  return gaussian_matrix(rows, cols, 1.0, eng);
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  Engine eng = make_engine(seed);
  return gaussian_vector(n, 1.0, eng);
}

inline double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

/// Moore-Penrose pseudoinverse through a full two-sided Jacobi SVD, kept
/// separate from the library's divide-and-conquer thin SVD.
inline Eigen::MatrixXd pinv(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double tol = s.size() ? s(0) * static_cast<double>(std::max(a.rows(), a.cols())) * 1e-12 : 0.0;
  Eigen::MatrixXd sinv = Eigen::MatrixXd::Zero(a.cols(), a.rows());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol) sinv(i, i) = 1.0 / s(i);
  return svd.matrixV() * sinv * svd.matrixU().transpose();
}

/// Orthonormal basis of the null space of a, from a full Jacobi SVD.
inline Eigen::MatrixXd null_space(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto rank = svd.rank();
  return svd.matrixV().rightCols(a.cols() - rank);
}

}  // namespace ridgeless::testing
