#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "potensor/diagnostics.hpp"
#include "potensor/solver.hpp"

namespace potensor {

struct Violation {
  int sweep = 0;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct CheckReport {
  int checked = 0;
  std::vector<Violation> violations;
  bool passed() const { return violations.empty(); }
};

/// Verifies g_p - g_{p+1} >= (min{ε, 2κ²}/2)·||U_[p] - U_[p+1]||_F² on every
/// non-truncation sweep after stabilization, up to a 1e-10·||A||² slack.
inline CheckReport check_sufficient_decrease(const SolveResult& res) {
  CheckReport rep;
  const double c = 0.5 * std::min(res.epsilon, 2.0 * res.kappa * res.kappa);
  const double slack = 1e-10 * res.norm_A * res.norm_A;
  double g_prev = -1.0;
  for (const SweepRecord& rec : res.trace) {
    const bool eligible = rec.sweep > res.stabilization_sweep &&
                          rec.truncated.empty() && !rec.zero_contraction &&
                          g_prev >= 0.0;
    if (eligible) {
      const double decrease = g_prev - rec.objective;
      const double required = c * rec.step_norm * rec.step_norm;
      ++rep.checked;
      if (decrease + slack < required)
        rep.violations.push_back({rec.sweep, decrease, required});
    }
    g_prev = rec.objective;
  }
  return rep;
}

struct SubgradReport {
  int checked = 0;
  std::vector<Violation> normal_violations;  // normal-space membership
  std::vector<Violation> bound_violations;   // the Lipschitz-type bound
  bool passed() const {
    return normal_violations.empty() && bound_violations.empty();
  }
};

/// Rebuilds W_[p+1] per block from the retained mid-sweep data
/// (W^(i) = U^(i)Λ² - V^(i)Λ^(i) - α(U_[p] - U_[p+1]) for polar modes,
/// W^(i) = U^(i)Λ² - V^(i)Λ^(i+1) for ALS modes), checks that each block
/// lies in the normal space of its constraint manifold, and that the full
/// gradient minus (W, 0) obeys the bound 2√k(2r√k||A||² + ε)·||ΔU||_F.
inline SubgradReport check_subgrad_bound(const DenseTensor& A,
                                         const SolveResult& res) {
  SubgradReport rep;
  const int k = A.order();
  const double sqrt_k = std::sqrt(static_cast<double>(k));
  const double normA2 = res.norm_A * res.norm_A;

  const FactorSet* prev = &res.initial;
  for (const SweepRecord& rec : res.trace) {
    const bool eligible = rec.truncated.empty() && !rec.zero_contraction &&
                          !rec.work.empty() && rec.state.num_modes() == k &&
                          prev->rank() == rec.state.rank();
    if (!eligible) {
      if (rec.state.num_modes() == k) prev = &rec.state;
      continue;
    }
    const FactorSet& cur = rec.state;
    const int r = cur.rank();
    const Eigen::VectorXd& lam = cur.lambda;  // optimal at the full point
    const double step = factor_distance(cur, *prev);
    const double bound_c = 2.0 * sqrt_k * (2.0 * r * sqrt_k * normA2 +
                                           res.epsilon);

    double diff_sq = 0.0;
    double normal_res = 0.0;
    for (int i = 0; i < k; ++i) {
      const ModeWork& w = rec.work[i];
      Eigen::MatrixXd W = cur.factors[i] * lam.cwiseProduct(lam).asDiagonal();
      if (i < cur.orth_modes) {
        W -= w.V * w.lambda_pre.asDiagonal();
        W -= w.alpha * (prev->factors[i] - cur.factors[i]);
        const Eigen::MatrixXd proj =
            cur.factors[i] * sym(cur.factors[i].transpose() * W);
        normal_res = std::max(normal_res, (W - proj).norm());
      } else {
        W -= w.V * w.lambda_post.asDiagonal();
        for (int j = 0; j < r; ++j) {
          const Eigen::VectorXd u = cur.factors[i].col(j);
          normal_res =
              std::max(normal_res, (W.col(j) - u * u.dot(W.col(j))).norm());
        }
      }
      // Full-point gradient block at (U_[p+1], λ_[p+1]).
      const Eigen::MatrixXd G =
          -contraction_matrix(A, cur, i) * lam.asDiagonal() +
          cur.factors[i] * lam.cwiseProduct(lam).asDiagonal();
      diff_sq += (G - W).squaredNorm();
    }
    // Lambda block of the gradient vanishes because lambda is refreshed by
    // its closed form at sweep end; include it anyway.
    const Eigen::VectorXd glam =
        lam - optimal_lambda(A, cur.factors);
    diff_sq += glam.squaredNorm();

    ++rep.checked;
    if (normal_res > 1e-8)
      rep.normal_violations.push_back({rec.sweep, normal_res, 1e-8});
    const double lhs = std::sqrt(diff_sq);
    const double rhs = bound_c * step + 1e-8;
    if (lhs > rhs) rep.bound_violations.push_back({rec.sweep, lhs, rhs});

    prev = &rec.state;
  }
  return rep;
}

struct TruncationReport {
  int total_truncated = 0;
  int initial_rank = 0;
  bool stable_after_recorded_sweep = true;  // no truncation past stabilization
  std::vector<Violation> jump_violations;   // objective jump vs kappa²
  bool passed() const {
    return stable_after_recorded_sweep && total_truncated <= initial_rank &&
           jump_violations.empty();
  }
};

/// Truncation bookkeeping: total removed columns bounded by the initial
/// rank, no truncation after the recorded stabilization sweep, and each
/// truncation sweep raises the objective by at most |J_p|·κ² (within slack).
inline TruncationReport check_truncation(const SolveResult& res) {
  TruncationReport rep;
  rep.initial_rank = res.initial.rank();
  double g_prev = -1.0;
  for (const SweepRecord& rec : res.trace) {
    if (!rec.truncated.empty()) {
      rep.total_truncated += static_cast<int>(rec.truncated.size());
      if (rec.sweep > res.stabilization_sweep)
        rep.stable_after_recorded_sweep = false;
      if (g_prev >= 0.0) {
        // A truncation sweep also performs descent steps, so the net change
        // is bounded by the truncation jump alone.
        const double jump = rec.objective - g_prev;
        const double allowed =
            rec.truncated.size() * res.kappa * res.kappa + 1e-10;
        if (jump > allowed)
          rep.jump_violations.push_back({rec.sweep, jump, allowed});
      }
    }
    g_prev = rec.objective;
  }
  return rep;
}

}  // namespace potensor
