#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <stdexcept>

#include "potensor/rng.hpp"

namespace potensor {

/// Y = Q H with Q orthonormal and H symmetric positive semidefinite.
/// sigma_min is the smallest eigenvalue of H (= smallest singular value of Y).
struct PolarFactors {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd H;
  double sigma_min = 0.0;
};

/// Polar decomposition via thin SVD: Y = UΣVᵀ, Q = UVᵀ, H = VΣVᵀ.
/// Q maximizes <Q', Y> over matrices with orthonormal columns; for
/// rank-deficient Y any orthonormal factor is returned (the SVD fixes the
/// choice deterministically).
inline PolarFactors polar_decompose(const Eigen::MatrixXd& Y) {
  if (Y.rows() < Y.cols())
    throw std::invalid_argument("polar_decompose: need rows >= cols");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  PolarFactors out;
  out.Q = svd.matrixU() * svd.matrixV().transpose();
  out.H = svd.matrixV() * svd.singularValues().asDiagonal() *
          svd.matrixV().transpose();
  out.sigma_min = svd.singularValues().minCoeff();
  return out;
}

/// QR of a Gaussian matrix with the R diagonal made nonnegative, so the
/// result is a deterministic function of the rng state.
inline Eigen::MatrixXd random_orthonormal(int n, int r, Rng& rng) {
  if (r > n) throw std::invalid_argument("random_orthonormal: r > n");
  Eigen::MatrixXd G(n, r);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < r; ++j) G(i, j) = rng.next_gaussian();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, r);
  Eigen::MatrixXd R =
      qr.matrixQR().topLeftCorner(r, r).triangularView<Eigen::Upper>();
  for (int j = 0; j < r; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

/// i.i.d. Gaussian columns normalized to unit length.
inline Eigen::MatrixXd random_unit_columns(int n, int r, Rng& rng) {
  if (r > n) throw std::invalid_argument("random_unit_columns: r > n");
  Eigen::MatrixXd U(n, r);
  for (int j = 0; j < r; ++j) {
    Eigen::VectorXd v(n);
    do {
      for (int i = 0; i < n; ++i) v[i] = rng.next_gaussian();
    } while (v.norm() == 0.0);
    U.col(j) = v / v.norm();
  }
  return U;
}

inline Eigen::MatrixXd sym(const Eigen::MatrixXd& M) {
  return 0.5 * (M + M.transpose());
}

}  // namespace potensor
