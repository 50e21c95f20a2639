#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "potensor/diagnostics.hpp"
#include "potensor/factor_set.hpp"
#include "potensor/linalg.hpp"
#include "potensor/rng.hpp"
#include "potensor/tensor.hpp"

namespace potensor {

struct SolverConfig {
  double epsilon = -1.0;    // proximal parameter; <=0 means 1e-3 * ||A||
  double kappa = -1.0;      // truncation parameter; <=0 means auto
  int max_sweeps = 5000;
  double tol_step = 1e-10;
  double tol_kkt = 1e-8;
  std::uint64_t seed = 0;
  int init_retries = 50;
  bool keep_states = true;  // retain per-sweep states for diagnostics

  void validate() const {
    if (max_sweeps < 1) throw std::invalid_argument("config: max_sweeps < 1");
    if (tol_step <= 0.0 || tol_kkt <= 0.0)
      throw std::invalid_argument("config: tolerances must be positive");
    if (init_retries < 1)
      throw std::invalid_argument("config: init_retries < 1");
  }
};

struct InitFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AllTruncatedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per-mode working data of one sweep, kept for the subdifferential check:
/// V^(i) and Λ^(i) are the mid-sweep contraction matrix and coefficient
/// diagonal, alpha the proximal shift actually applied.
struct ModeWork {
  Eigen::MatrixXd V;
  Eigen::VectorXd lambda_pre;   // λ^{i-1}_j at this mode
  Eigen::VectorXd lambda_post;  // λ^i_j (ALS modes; equals pre for polar modes)
  double alpha = 0.0;
  double sigma_min = std::numeric_limits<double>::quiet_NaN();
};

struct SweepRecord {
  int sweep = 0;
  double objective = 0.0;
  double step_norm = 0.0;        // ||U_[p] - U_[p-1]||_F over surviving columns
  double joint_step_norm = 0.0;  // includes the lambda block
  double kkt_residual = 0.0;
  int rank_after = 0;
  std::vector<double> sigma_min;       // per orthonormal mode, pre-correction
  std::vector<double> proximal_alpha;  // per orthonormal mode, 0 or epsilon
  std::vector<int> truncated;          // column indices removed this sweep
  bool zero_contraction = false;
  std::vector<ModeWork> work;          // per mode; empty unless keep_states
  FactorSet state;                     // post-sweep; empty unless keep_states
};

enum class SolveStatus { Converged, MaxSweeps, AllTruncated };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxSweeps: return "MaxSweeps";
    case SolveStatus::AllTruncated: return "AllTruncated";
  }
  return "?";
}

struct SolveResult {
  FactorSet initial;
  FactorSet final_state;
  std::vector<SweepRecord> trace;
  SolveStatus status = SolveStatus::MaxSweeps;
  int stabilization_sweep = 0;  // last sweep with a nonempty truncation set
  double epsilon = 0.0;
  double kappa = 0.0;
  double norm_A = 0.0;
};

inline double objective(const DenseTensor& A, const FactorSet& U) {
  const double res = frobenius(subtract(A, rank1_sum(U)));
  return 0.5 * res * res;
}

/// λ_j = (((U^(1))ᵀ,...,(U^(k))ᵀ)·A)_{j,...,j}; the exact minimizer of g
/// over lambda when all factors are orthonormal.
inline Eigen::VectorXd optimal_lambda(const DenseTensor& A,
                                      const std::vector<Eigen::MatrixXd>& U) {
  return diag_k(multilinear_transform(A, U));
}

inline Eigen::VectorXd optimal_lambda(const DenseTensor& A,
                                      const FactorSet& U) {
  return optimal_lambda(A, U.factors);
}

struct InitResult {
  FactorSet state;
  double kappa = 0.0;
};

/// Random feasible start with 2g(U_0, λ_0) < ||A||², retried up to
/// cfg.init_retries times. Auto kappa is the midpoint of the admissible
/// interval (0, sqrt((||A||² - 2g)/r)).
inline InitResult init(const DenseTensor& A, int r, int s,
                       const SolverConfig& cfg, Rng& rng) {
  cfg.validate();
  const int k = A.order();
  if (s < 1 || s > k) throw std::invalid_argument("init: s out of range");
  if (r < 1) throw std::invalid_argument("init: rank must be positive");
  for (int i = 0; i < k; ++i)
    if (r > A.dim(i)) throw std::invalid_argument("init: rank exceeds a dim");
  const double normA2 = inner(A, A);
  if (normA2 == 0.0) throw std::invalid_argument("init: zero tensor");

  for (int attempt = 0; attempt < cfg.init_retries; ++attempt) {
    FactorSet U;
    U.orth_modes = s;
    for (int i = 0; i < k; ++i)
      U.factors.push_back(i < s ? random_orthonormal(A.dim(i), r, rng)
                                : random_unit_columns(A.dim(i), r, rng));
    U.lambda = optimal_lambda(A, U);
    const double g = objective(A, U);
    if (2.0 * g < normA2) {
      InitResult out;
      out.state = std::move(U);
      out.kappa = cfg.kappa > 0.0 ? cfg.kappa
                                  : 0.5 * std::sqrt((normA2 - 2.0 * g) / r);
      return out;
    }
  }
  throw InitFailed("init: no start with 2g < ||A||^2 after retries");
}

namespace detail {

/// Assembles the contraction point for mode i, column j: modes before i from
/// the freshly updated state, modes from i on from the sweep-start iterate.
inline std::vector<Eigen::VectorXd> mixed_point(const FactorSet& state,
                                                const FactorSet& prev, int i,
                                                int j) {
  std::vector<Eigen::VectorXd> x;
  x.reserve(state.num_modes());
  for (int m = 0; m < state.num_modes(); ++m)
    x.push_back(m < i ? state.factors[m].col(j) : prev.factors[m].col(j));
  return x;
}

inline void drop_work_columns(std::vector<ModeWork>& work,
                              const std::vector<int>& cols) {
  for (auto& w : work) {
    const int r = static_cast<int>(w.V.cols());
    if (r == 0) continue;  // mode not visited yet this sweep
    std::vector<bool> drop(r, false);
    for (int c : cols) drop[c] = true;
    int keep = 0;
    for (int j = 0; j < r; ++j)
      if (!drop[j]) ++keep;
    Eigen::MatrixXd V(w.V.rows(), keep);
    Eigen::VectorXd pre(keep), post(keep);
    int t = 0;
    for (int j = 0; j < r; ++j)
      if (!drop[j]) {
        V.col(t) = w.V.col(j);
        pre[t] = w.lambda_pre[j];
        post[t] = w.lambda_post[j];
        ++t;
      }
    w.V = std::move(V);
    w.lambda_pre = std::move(pre);
    w.lambda_post = std::move(post);
  }
}

}  // namespace detail

/// One pass of Algorithm iAPD-ALS over all modes: polar updates with
/// proximal correction for the orthonormal modes, a single truncation test
/// right after mode s, normalized ALS updates for the remaining modes, and
/// a final lambda refresh. `state` is updated in place.
inline SweepRecord sweep(const DenseTensor& A, FactorSet& state, double kappa,
                         double epsilon, Rng& rng, bool keep_states = true) {
  const int k = state.num_modes();
  const int s = state.orth_modes;
  FactorSet prev = state;
  SweepRecord rec;
  rec.work.resize(k);

  for (int i = 0; i < k; ++i) {
    const int r = state.rank();
    Eigen::MatrixXd V(A.dim(i), r);
    Eigen::VectorXd lam_pre(r);
    for (int j = 0; j < r; ++j) {
      const auto x = detail::mixed_point(state, prev, i, j);
      V.col(j) = contract_skip(A, x, i);
      lam_pre[j] = V.col(j).dot(prev.factors[i].col(j));
    }
    ModeWork& w = rec.work[i];
    w.V = V;
    w.lambda_pre = lam_pre;
    w.lambda_post = lam_pre;

    if (i < s) {
      const Eigen::MatrixXd Y = V * lam_pre.asDiagonal();
      PolarFactors pf = polar_decompose(Y);
      w.sigma_min = pf.sigma_min;
      rec.sigma_min.push_back(pf.sigma_min);
      if (pf.sigma_min < epsilon) {
        pf = polar_decompose(Y + epsilon * prev.factors[i]);
        w.alpha = epsilon;
      }
      rec.proximal_alpha.push_back(w.alpha);
      state.factors[i] = pf.Q;
      for (int j = 0; j < r; ++j)
        w.lambda_post[j] = V.col(j).dot(state.factors[i].col(j));
    } else {
      for (int j = 0; j < r; ++j) {
        const double nv = V.col(j).norm();
        if (nv == 0.0) {
          // Measure-zero degenerate branch: restart the column.
          Eigen::VectorXd fresh = random_unit_columns(A.dim(i), 1, rng).col(0);
          state.factors[i].col(j) = fresh;
          rec.zero_contraction = true;
          w.lambda_post[j] = 0.0;
        } else {
          const double sgn = lam_pre[j] < 0.0 ? -1.0 : 1.0;
          state.factors[i].col(j) = sgn * V.col(j) / nv;
          w.lambda_post[j] = V.col(j).dot(state.factors[i].col(j));
        }
      }
    }

    if (i == s - 1) {
      // Truncation test, once per sweep, against the fresh mode-s factor.
      std::vector<int> J;
      for (int j = 0; j < r; ++j)
        if (std::abs(V.col(j).dot(state.factors[i].col(j))) < kappa)
          J.push_back(j);
      if (!J.empty()) {
        rec.truncated = J;
        state.remove_columns(J);
        prev.remove_columns(J);
        detail::drop_work_columns(rec.work, J);
        if (state.rank() == 0)
          throw AllTruncatedError("sweep: all columns truncated");
      }
    }
  }

  state.lambda = optimal_lambda(A, state);
  rec.rank_after = state.rank();
  rec.objective = objective(A, state);
  rec.step_norm = factor_distance(state, prev);
  rec.joint_step_norm = std::sqrt(rec.step_norm * rec.step_norm +
                                  (state.lambda - prev.lambda).squaredNorm());
  rec.kkt_residual = kkt_residual(A, state);
  if (keep_states)
    rec.state = state;
  else
    rec.work.clear();
  return rec;
}

inline SolveResult solve(const DenseTensor& A, int r, int s,
                         const SolverConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const double normA = frobenius(A);
  const double epsilon = cfg.epsilon > 0.0 ? cfg.epsilon : 1e-3 * normA;

  SolveResult out;
  out.norm_A = normA;
  out.epsilon = epsilon;
  InitResult ini = init(A, r, s, cfg, rng);
  out.kappa = ini.kappa;
  out.initial = ini.state;

  FactorSet state = ini.state;
  out.status = SolveStatus::MaxSweeps;
  for (int p = 1; p <= cfg.max_sweeps; ++p) {
    SweepRecord rec;
    try {
      rec = sweep(A, state, ini.kappa, epsilon, rng, cfg.keep_states);
    } catch (const AllTruncatedError&) {
      out.status = SolveStatus::AllTruncated;
      break;
    }
    rec.sweep = p;
    if (!rec.truncated.empty()) out.stabilization_sweep = p;
    out.trace.push_back(std::move(rec));
    const SweepRecord& last = out.trace.back();
    if (last.step_norm <= cfg.tol_step && last.kkt_residual <= cfg.tol_kkt) {
      out.status = SolveStatus::Converged;
      break;
    }
  }
  out.final_state = state;
  return out;
}

}  // namespace potensor
