#include "potensor/diagnostics.hpp"

#include <gtest/gtest.h>

#include "potensor/convergence_checks.hpp"
#include "potensor/linalg.hpp"
#include "potensor/solver.hpp"

using namespace potensor;

namespace {

DenseTensor random_tensor(std::vector<int> dims, Rng& rng) {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  std::vector<double> data(n);
  for (double& v : data) v = rng.next_gaussian();
  return DenseTensor(std::move(dims), std::move(data));
}

FactorSet random_feasible(const std::vector<int>& dims, int r, int s,
                          Rng& rng) {
  FactorSet U;
  U.orth_modes = s;
  for (std::size_t i = 0; i < dims.size(); ++i)
    U.factors.push_back(static_cast<int>(i) < s
                            ? random_orthonormal(dims[i], r, rng)
                            : random_unit_columns(dims[i], r, rng));
  U.lambda = Eigen::VectorXd::Zero(r);
  return U;
}

/// QR retraction for Stiefel blocks, column renormalization for sphere
/// blocks. First-order, so d/dh g(retract(h)) at 0 equals <grad, direction>
/// for tangent directions.
FactorSet retract_block(const FactorSet& U, int block,
                        const Eigen::MatrixXd& delta, double h) {
  FactorSet out = U;
  const Eigen::MatrixXd Y = U.factors[block] + h * delta;
  if (block < U.orth_modes) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
    Eigen::MatrixXd Q = qr.householderQ() *
                        Eigen::MatrixXd::Identity(Y.rows(), Y.cols());
    for (int j = 0; j < Y.cols(); ++j)
      if (qr.matrixQR()(j, j) < 0.0) Q.col(j) = -Q.col(j);
    out.factors[block] = Q;
  } else {
    Eigen::MatrixXd N = Y;
    for (int j = 0; j < N.cols(); ++j) N.col(j).normalize();
    out.factors[block] = N;
  }
  return out;
}

Eigen::MatrixXd random_tangent(const FactorSet& U, int block, Rng& rng) {
  Eigen::MatrixXd W(U.factors[block].rows(), U.factors[block].cols());
  for (int i = 0; i < W.rows(); ++i)
    for (int j = 0; j < W.cols(); ++j) W(i, j) = rng.next_gaussian();
  const Eigen::MatrixXd& Ub = U.factors[block];
  if (block < U.orth_modes) return W - Ub * sym(Ub.transpose() * W);
  Eigen::MatrixXd T = W;
  for (int j = 0; j < W.cols(); ++j)
    T.col(j) -= Ub.col(j) * Ub.col(j).dot(W.col(j));
  return T;
}

TEST(Gradient, VanishesAtExactDecomposition) {
  Rng rng(1);
  FactorSet U = random_feasible({4, 4, 4}, 2, 1, rng);
  U.lambda << 1.3, -0.6;
  const DenseTensor A = rank1_sum(U);
  U.lambda = optimal_lambda(A, U);
  const GradientBlocks g = gradient(A, U);
  EXPECT_NEAR(g.lambda.norm(), 0.0, 1e-12);
  // ALS blocks vanish outright; the Stiefel block may carry a normal-space
  // component (it is gauge for the optimization), so project it away.
  for (int i = 0; i < U.num_modes(); ++i) {
    const Eigen::MatrixXd& Ui = U.factors[i];
    const Eigen::MatrixXd& Gi = g.factor[i];
    if (i < U.orth_modes)
      EXPECT_NEAR((Gi - Ui * sym(Ui.transpose() * Gi)).norm(), 0.0, 1e-11);
    else
      EXPECT_NEAR(Gi.norm(), 0.0, 1e-11);
  }
}

TEST(Gradient, ZeroLambdaZeroFactorBlocks) {
  Rng rng(2);
  const DenseTensor A = random_tensor({3, 3, 3}, rng);
  FactorSet U = random_feasible({3, 3, 3}, 2, 1, rng);
  const GradientBlocks g = gradient(A, U);
  for (const auto& G : g.factor) EXPECT_NEAR(G.norm(), 0.0, 1e-14);
  const Eigen::VectorXd expected = -optimal_lambda(A, U);
  EXPECT_NEAR((g.lambda - expected).norm(), 0.0, 1e-13);
}

TEST(Gradient, MatchesRetractedFiniteDifferences) {
  Rng rng(3);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<int> dims = trial % 2 ? std::vector<int>{4, 4, 4, 4}
                                            : std::vector<int>{3, 4, 5};
    const int s = trial % 2 ? 2 : 1;
    const int r = trial % 2 ? 3 : 2;
    const DenseTensor A = random_tensor(dims, rng);
    FactorSet U = random_feasible(dims, r, s, rng);
    for (int j = 0; j < r; ++j) U.lambda[j] = rng.next_gaussian();

    const GradientBlocks g = gradient(A, U);
    for (int b = 0; b < U.num_modes(); ++b) {
      const Eigen::MatrixXd delta = random_tangent(U, b, rng);
      const double fd = (objective(A, retract_block(U, b, delta, h)) -
                         objective(A, retract_block(U, b, delta, -h))) /
                        (2.0 * h);
      const double analytic = (g.factor[b].array() * delta.array()).sum();
      EXPECT_NEAR(fd, analytic,
                  1e-5 * std::max(1.0, std::abs(analytic)))
          << "trial " << trial << " block " << b;
    }
    // Lambda block along a straight line.
    Eigen::VectorXd dl(r);
    for (int j = 0; j < r; ++j) dl[j] = rng.next_gaussian();
    FactorSet Up = U, Um = U;
    Up.lambda += h * dl;
    Um.lambda -= h * dl;
    const double fd = (objective(A, Up) - objective(A, Um)) / (2.0 * h);
    EXPECT_NEAR(fd, g.lambda.dot(dl), 1e-5 * std::max(1.0, fd));
  }
}

TEST(KktResidual, ZeroAtExactDecompositionPositiveElsewhere) {
  Rng rng(4);
  FactorSet U = random_feasible({4, 4, 4}, 2, 1, rng);
  U.lambda << 2.0, 1.0;
  const DenseTensor A = rank1_sum(U);
  U.lambda = optimal_lambda(A, U);
  EXPECT_LE(kkt_residual(A, U), 1e-12);

  const DenseTensor B = random_tensor({4, 4, 4}, rng);
  FactorSet V = random_feasible({4, 4, 4}, 2, 1, rng);
  V.lambda = optimal_lambda(B, V);
  EXPECT_GT(kkt_residual(B, V), 1e-6);
}

TEST(KktResidual, GaugeInvariance) {
  Rng rng(5);
  const DenseTensor A = random_tensor({4, 4, 4}, rng);
  FactorSet U = random_feasible({4, 4, 4}, 2, 1, rng);
  U.lambda = optimal_lambda(A, U);
  const double base = kkt_residual(A, U);
  // Flip the sign of column j in two modes simultaneously: same tensor,
  // same lambda, so the residual must not move.
  FactorSet flipped = U;
  flipped.factors[0].col(1) *= -1.0;
  flipped.factors[2].col(1) *= -1.0;
  EXPECT_NEAR(kkt_residual(A, flipped), base, 1e-12 * (1.0 + base));
}

TEST(KktResidual, ScalingConsistencyAtCriticalPoint) {
  Rng rng(6);
  FactorSet star = random_feasible({5, 5, 5}, 2, 1, rng);
  star.lambda << 1.4, -0.9;
  const DenseTensor A = rank1_sum(star);
  SolverConfig cfg;
  cfg.seed = 12;
  cfg.tol_kkt = 1e-11;
  const SolveResult res = solve(A, 2, 1, cfg);
  ASSERT_EQ(res.status, SolveStatus::Converged);
  FactorSet U = res.final_state;
  EXPECT_LE(kkt_residual(A, U), 1e-10);

  const double c = 2.5;
  std::vector<double> scaled(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) scaled[i] = c * A.data()[i];
  const DenseTensor cA(A.shape(), scaled);
  FactorSet cU = U;
  cU.lambda *= c;
  // Factor blocks scale by c², the lambda block by c.
  EXPECT_LE(kkt_residual(cA, cU), c * c * 1e-10);
}

TEST(RateFit, GeometricTrace) {
  std::vector<double> g;
  for (int p = 0; p <= 80; ++p) g.push_back(std::pow(0.5, p));
  const RateFit fit = rate_fit(g, 1.0);
  EXPECT_NEAR(fit.q_tail_median, 0.5, 1e-6);
  EXPECT_NEAR(fit.r_linear_rho, 0.5, 1e-6);
  EXPECT_GT(fit.r_squared, 0.999);
  EXPECT_FALSE(fit.sublinear_flag);
}

TEST(RateFit, HarmonicTraceFlaggedSublinear) {
  std::vector<double> g;
  for (int p = 1; p <= 10000; ++p) g.push_back(1.0 / p);
  const RateFit fit = rate_fit(g, 1.0);
  EXPECT_GT(fit.q_tail_median, 0.999);
  EXPECT_TRUE(fit.sublinear_flag);
}

TEST(RateFit, WindowTooShort) {
  std::vector<double> g(20, 1.0);
  EXPECT_THROW(rate_fit(g, 1.0), WindowTooShort);
}

TEST(SufficientDecrease, CleanOnPlantedRun) {
  Rng rng(7);
  FactorSet star = random_feasible({5, 5, 5}, 2, 1, rng);
  star.lambda << 2.0, -1.0;
  const DenseTensor A = rank1_sum(star);
  SolverConfig cfg;
  cfg.seed = 3;
  const SolveResult res = solve(A, 2, 1, cfg);
  const CheckReport rep = check_sufficient_decrease(res);
  EXPECT_GT(rep.checked, 0);
  EXPECT_TRUE(rep.passed()) << rep.violations.size() << " violations";
}

TEST(SufficientDecrease, CleanOnGaussianRun) {
  Rng rng(8);
  const DenseTensor A = random_tensor({5, 5, 5}, rng);
  SolverConfig cfg;
  cfg.seed = 4;
  cfg.max_sweeps = 500;
  cfg.tol_step = 1e-300;
  cfg.tol_kkt = 1e-300;
  const SolveResult res = solve(A, 2, 2, cfg);
  const CheckReport rep = check_sufficient_decrease(res);
  EXPECT_GT(rep.checked, 100);
  EXPECT_TRUE(rep.passed()) << rep.violations.size() << " violations";
}

TEST(SubgradBound, FixedPointBothSidesVanish) {
  Rng rng(9);
  FactorSet star = random_feasible({4, 4, 4}, 2, 1, rng);
  star.lambda << 2.2, -1.4;
  const DenseTensor A = rank1_sum(star);
  SolverConfig cfg;
  cfg.seed = 6;
  const SolveResult res = solve(A, 2, 1, cfg);
  ASSERT_EQ(res.status, SolveStatus::Converged);
  const SubgradReport rep = check_subgrad_bound(A, res);
  EXPECT_GT(rep.checked, 0);
  EXPECT_TRUE(rep.passed());
}

TEST(SubgradBound, HoldsOnGenericRun) {
  Rng rng(10);
  const DenseTensor A = random_tensor({4, 4, 4, 4}, rng);
  SolverConfig cfg;
  cfg.seed = 7;
  cfg.max_sweeps = 300;
  const SolveResult res = solve(A, 2, 1, cfg);
  const SubgradReport rep = check_subgrad_bound(A, res);
  EXPECT_GT(rep.checked, 0);
  EXPECT_TRUE(rep.passed())
      << rep.normal_violations.size() << " normal / "
      << rep.bound_violations.size() << " bound violations";
}

TEST(SubgradBound, HoldsWithProximalCorrectionActive) {
  Rng rng(11);
  const DenseTensor A = random_tensor({4, 4, 4}, rng);
  SolverConfig cfg;
  cfg.seed = 8;
  cfg.max_sweeps = 100;
  // Oversized epsilon forces the proximal branch on every polar step.
  cfg.epsilon = 10.0 * frobenius(A);
  const SolveResult res = solve(A, 2, 1, cfg);
  bool proximal_seen = false;
  for (const SweepRecord& rec : res.trace)
    for (double a : rec.proximal_alpha)
      if (a > 0.0) proximal_seen = true;
  ASSERT_TRUE(proximal_seen);
  const SubgradReport rep = check_subgrad_bound(A, res);
  EXPECT_GT(rep.checked, 0);
  EXPECT_TRUE(rep.passed());
}

TEST(Truncation, JumpBoundedByKappaSquared) {
  Rng rng(12);
  FactorSet star = random_feasible({5, 5, 5}, 1, 1, rng);
  star.lambda << 2.0;
  const DenseTensor A = rank1_sum(star);
  SolverConfig cfg;
  cfg.seed = 9;
  cfg.max_sweeps = 300;
  const SolveResult res = solve(A, 3, 1, cfg);
  const TruncationReport rep = check_truncation(res);
  EXPECT_TRUE(rep.passed());
  EXPECT_LE(rep.total_truncated, rep.initial_rank);
}

}  // namespace
