#include "potensor/linalg.hpp"

#include <gtest/gtest.h>

using namespace potensor;

namespace {

Eigen::MatrixXd random_matrix(int n, int m, Rng& rng) {
  Eigen::MatrixXd Y(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) Y(i, j) = rng.next_gaussian();
  return Y;
}

TEST(Polar, Identity) {
  const auto pf = polar_decompose(Eigen::MatrixXd::Identity(2, 2));
  EXPECT_NEAR((pf.Q - Eigen::MatrixXd::Identity(2, 2)).norm(), 0.0, 1e-14);
  EXPECT_NEAR((pf.H - Eigen::MatrixXd::Identity(2, 2)).norm(), 0.0, 1e-14);
  EXPECT_NEAR(pf.sigma_min, 1.0, 1e-14);
}

TEST(Polar, PositiveDiagonal) {
  Eigen::MatrixXd Y = Eigen::Vector2d(2.0, 3.0).asDiagonal();
  const auto pf = polar_decompose(Y);
  EXPECT_NEAR((pf.Q - Eigen::MatrixXd::Identity(2, 2)).norm(), 0.0, 1e-13);
  EXPECT_NEAR((pf.H - Y).norm(), 0.0, 1e-13);
  EXPECT_NEAR(pf.sigma_min, 2.0, 1e-13);
}

TEST(Polar, FactorInvariants) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 7);
    const int m = 1 + static_cast<int>(rng.next_u64() % n);
    const Eigen::MatrixXd Y = random_matrix(n, m, rng);
    const auto pf = polar_decompose(Y);
    EXPECT_NEAR((pf.Q.transpose() * pf.Q -
                 Eigen::MatrixXd::Identity(m, m)).norm(),
                0.0, 1e-10);
    EXPECT_NEAR((pf.H - pf.H.transpose()).norm(), 0.0, 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pf.H);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
    EXPECT_LE((pf.Q * pf.H - Y).norm(), 1e-8 * std::max(1.0, Y.norm()));
  }
}

TEST(Polar, MatchesSvdOracleAndMaximizesInnerProduct) {
  Rng rng(123);
  const Eigen::MatrixXd Y = random_matrix(5, 3, rng);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::MatrixXd Q_oracle = svd.matrixU() * svd.matrixV().transpose();
  const Eigen::MatrixXd H_oracle = svd.matrixV() *
                                   svd.singularValues().asDiagonal() *
                                   svd.matrixV().transpose();
  const auto pf = polar_decompose(Y);
  EXPECT_NEAR((pf.Q - Q_oracle).norm(), 0.0, 1e-10);
  EXPECT_NEAR((pf.H - H_oracle).norm(), 0.0, 1e-10);

  const double best = (pf.Q.array() * Y.array()).sum();
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd Qp = random_orthonormal(5, 3, rng);
    EXPECT_GE(best + 1e-10, (Qp.array() * Y.array()).sum());
  }
}

TEST(Polar, RecoversPlantedFactors) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd Q0 = random_orthonormal(6, 3, rng);
    // SPD H0 with smallest eigenvalue bounded away from zero.
    const Eigen::MatrixXd B = random_matrix(3, 3, rng);
    const Eigen::MatrixXd H0 =
        B * B.transpose() + 0.1 * Eigen::MatrixXd::Identity(3, 3);
    const auto pf = polar_decompose(Q0 * H0);
    EXPECT_NEAR((pf.Q - Q0).norm(), 0.0, 1e-8);
    EXPECT_NEAR((pf.H - H0).norm(), 0.0, 1e-8);
  }
}

TEST(Polar, RankDeficientStillValid) {
  Eigen::MatrixXd Y(3, 2);
  Y << 1, 2, 2, 4, 3, 6;  // rank one
  const auto pf = polar_decompose(Y);
  EXPECT_NEAR((pf.Q.transpose() * pf.Q -
               Eigen::MatrixXd::Identity(2, 2)).norm(),
              0.0, 1e-10);
  EXPECT_NEAR((pf.Q * pf.H - Y).norm(), 0.0, 1e-8 * Y.norm());
  EXPECT_NEAR(pf.sigma_min, 0.0, 1e-12);
}

TEST(Polar, RejectsWideInput) {
  EXPECT_THROW(polar_decompose(Eigen::MatrixXd::Zero(2, 3)),
               std::invalid_argument);
}

TEST(RandomOrthonormal, ColumnsOrthonormal) {
  Rng rng(4);
  const Eigen::MatrixXd U = random_orthonormal(3, 2, rng);
  EXPECT_NEAR(
      (U.transpose() * U - Eigen::MatrixXd::Identity(2, 2)).norm(), 0.0,
      1e-12);
}

TEST(RandomOrthonormal, OneByOneIsUnit) {
  Rng rng(99);
  const Eigen::MatrixXd U = random_orthonormal(1, 1, rng);
  EXPECT_NEAR(std::abs(U(0, 0)), 1.0, 1e-15);
}

TEST(RandomOrthonormal, DeterministicPerSeed) {
  Rng a(42), b(42);
  const Eigen::MatrixXd U1 = random_orthonormal(4, 2, a);
  const Eigen::MatrixXd U2 = random_orthonormal(4, 2, b);
  EXPECT_TRUE(U1 == U2);  // bit-identical
  Rng c(43);
  EXPECT_FALSE(U1 == random_orthonormal(4, 2, c));
}

TEST(RandomOrthonormal, RejectsTooManyColumns) {
  Rng rng(1);
  EXPECT_THROW(random_orthonormal(2, 3, rng), std::invalid_argument);
  EXPECT_THROW(random_unit_columns(2, 3, rng), std::invalid_argument);
}

TEST(RandomUnitColumns, UnitNorms) {
  Rng rng(6);
  const Eigen::MatrixXd U = random_unit_columns(5, 3, rng);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(U.col(j).norm(), 1.0, 1e-12);
}

}  // namespace
