#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "potensor/factor_set.hpp"
#include "potensor/linalg.hpp"
#include "potensor/tensor.hpp"

namespace potensor {

/// Euclidean gradient of g(U,lambda) = ½‖A − Σ λ_j u_j^(1)⊗...⊗u_j^(k)‖²,
/// block per factor matrix plus the lambda block.
struct GradientBlocks {
  std::vector<Eigen::MatrixXd> factor;  // G^(i) = -V^(i)Γ + U^(i)Γ²
  Eigen::VectorXd lambda;               // λ - Diag_k((U^(1)ᵀ,...,U^(k)ᵀ)·A)
};

/// Columns of V^(i): the mode-i partial contractions at the full current
/// point x_j (all modes taken from U).
inline Eigen::MatrixXd contraction_matrix(const DenseTensor& A,
                                          const FactorSet& U, int mode) {
  const int r = U.rank();
  Eigen::MatrixXd V(A.dim(mode), r);
  for (int j = 0; j < r; ++j)
    V.col(j) = contract_skip(A, U.column_point(j), mode);
  return V;
}

inline GradientBlocks gradient(const DenseTensor& A, const FactorSet& U) {
  const int k = U.num_modes();
  const int r = U.rank();
  GradientBlocks g;
  g.factor.reserve(k);
  const Eigen::VectorXd& lam = U.lambda;
  for (int i = 0; i < k; ++i) {
    const Eigen::MatrixXd V = contraction_matrix(A, U, i);
    g.factor.push_back(-V * lam.asDiagonal() +
                       U.factors[i] * lam.cwiseProduct(lam).asDiagonal());
  }
  std::vector<Eigen::MatrixXd> M = U.factors;
  g.lambda = lam - diag_k(multilinear_transform(A, M));
  (void)r;
  return g;
}

/// Norm of the gradient with its normal-space component removed per block:
/// Stiefel blocks lose U·sym(UᵀG), sphere columns lose their radial part,
/// the lambda block is kept whole. Zero exactly at KKT points.
inline double kkt_residual(const DenseTensor& A, const FactorSet& U) {
  const GradientBlocks g = gradient(A, U);
  double acc = g.lambda.squaredNorm();
  for (int i = 0; i < U.num_modes(); ++i) {
    const Eigen::MatrixXd& Ui = U.factors[i];
    const Eigen::MatrixXd& Gi = g.factor[i];
    if (i < U.orth_modes) {
      const Eigen::MatrixXd T = Gi - Ui * sym(Ui.transpose() * Gi);
      acc += T.squaredNorm();
    } else {
      for (int j = 0; j < U.rank(); ++j) {
        const Eigen::VectorXd t =
            Gi.col(j) - Ui.col(j) * (Ui.col(j).dot(Gi.col(j)));
        acc += t.squaredNorm();
      }
    }
  }
  return std::sqrt(acc);
}

struct WindowTooShort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Convergence-rate estimate from an objective trace.
struct RateFit {
  std::vector<double> q_ratios;  // (g_p - g*)/(g_{p-1} - g*) over the window
  double q_tail_median = 0.0;
  double r_linear_rho = 0.0;     // exp(slope) of the log-residual fit
  double r_squared = 0.0;        // fit quality of the log-linear regression
  int window_begin = 0;
  int window_end = 0;            // exclusive
  bool sublinear_flag = false;
};

/// Fits per-sweep objective ratios and a log-linear decay rate over the
/// window where the residual g_p - g* is neither converged to noise nor
/// still in the transient. `objectives[first_index]` is the first sweep
/// considered (typically the stabilization sweep).
inline RateFit rate_fit(const std::vector<double>& objectives, double norm_A,
                        int first_index = 0) {
  if (static_cast<int>(objectives.size()) - first_index < 30)
    throw WindowTooShort("rate_fit: fewer than 30 post-stabilization sweeps");
  const double g_star =
      *std::min_element(objectives.begin() + first_index, objectives.end());
  const double g_first = objectives[first_index];
  const double floor = 1e3 * std::numeric_limits<double>::epsilon() *
                       norm_A * norm_A;
  const double ceil = 1e-2 * (g_first - g_star);

  RateFit fit;
  fit.window_begin = -1;
  std::vector<double> logs;
  std::vector<int> log_idx;
  for (int p = first_index; p < static_cast<int>(objectives.size()); ++p) {
    const double res = objectives[p] - g_star;
    if (res > floor && res < ceil) {
      if (fit.window_begin < 0) fit.window_begin = p;
      fit.window_end = p + 1;
      logs.push_back(std::log(res));
      log_idx.push_back(p);
      const double prev = objectives[p - 1] - g_star;
      if (p > first_index && prev > floor) fit.q_ratios.push_back(res / prev);
    }
  }
  if (static_cast<int>(log_idx.size()) < 10)
    throw WindowTooShort("rate_fit: fewer than 10 usable window points");

  std::vector<double> ratios = fit.q_ratios;
  std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2,
                   ratios.end());
  fit.q_tail_median = ratios[ratios.size() / 2];
  fit.sublinear_flag = fit.q_tail_median > 1.0 - 1e-3;

  // Least squares of log residual against sweep index.
  const int n = static_cast<int>(logs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int t = 0; t < n; ++t) {
    sx += log_idx[t];
    sy += logs[t];
    sxx += static_cast<double>(log_idx[t]) * log_idx[t];
    sxy += log_idx[t] * logs[t];
  }
  const double denom = n * sxx - sx * sx;
  const double slope = (n * sxy - sx * sy) / denom;
  const double icept = (sy - slope * sx) / n;
  fit.r_linear_rho = std::exp(slope);
  double ss_res = 0, ss_tot = 0;
  const double mean_y = sy / n;
  for (int t = 0; t < n; ++t) {
    const double pred = icept + slope * log_idx[t];
    ss_res += (logs[t] - pred) * (logs[t] - pred);
    ss_tot += (logs[t] - mean_y) * (logs[t] - mean_y);
  }
  fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

}  // namespace potensor
