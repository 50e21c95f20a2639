#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "potensor/tensor.hpp"

namespace potensor {

/// Decision variables of the partially orthogonal approximation: k factor
/// matrices U^(i) of size n_i x r and the coefficient vector lambda. The
/// first `orth_modes` factors have orthonormal columns (Stiefel), the rest
/// unit-norm columns (sphere product).
struct FactorSet {
  std::vector<Eigen::MatrixXd> factors;
  Eigen::VectorXd lambda;
  int orth_modes = 1;

  int num_modes() const { return static_cast<int>(factors.size()); }
  int rank() const {
    return factors.empty() ? 0 : static_cast<int>(factors.front().cols());
  }

  /// Worst feasibility defect over all constraint blocks.
  double feasibility_error() const {
    double worst = 0.0;
    const int r = rank();
    for (int i = 0; i < num_modes(); ++i) {
      const Eigen::MatrixXd& U = factors[i];
      if (static_cast<int>(U.cols()) != r)
        throw std::invalid_argument("FactorSet: inconsistent rank");
      if (i < orth_modes) {
        const Eigen::MatrixXd G =
            U.transpose() * U - Eigen::MatrixXd::Identity(r, r);
        worst = std::max(worst, G.norm());
      } else {
        for (int j = 0; j < r; ++j)
          worst = std::max(worst, std::abs(U.col(j).norm() - 1.0));
      }
    }
    return worst;
  }

  /// Drops the listed columns (and lambda entries) from every factor.
  void remove_columns(const std::vector<int>& cols) {
    if (cols.empty()) return;
    const int r = rank();
    std::vector<bool> drop(r, false);
    for (int c : cols) drop.at(c) = true;
    int keep = 0;
    for (int j = 0; j < r; ++j)
      if (!drop[j]) ++keep;
    for (auto& U : factors) {
      Eigen::MatrixXd M(U.rows(), keep);
      int t = 0;
      for (int j = 0; j < r; ++j)
        if (!drop[j]) M.col(t++) = U.col(j);
      U = std::move(M);
    }
    Eigen::VectorXd nl(keep);
    int t = 0;
    for (int j = 0; j < r; ++j)
      if (!drop[j]) nl[t++] = lambda[j];
    lambda = std::move(nl);
  }

  /// Column j of each factor, as the contraction point x_j.
  std::vector<Eigen::VectorXd> column_point(int j) const {
    std::vector<Eigen::VectorXd> x;
    x.reserve(factors.size());
    for (const auto& U : factors) x.push_back(U.col(j));
    return x;
  }
};

inline DenseTensor rank1_sum(const FactorSet& U) {
  return rank1_sum(U.factors, U.lambda);
}

/// Frobenius distance between the factor tuples (lambda excluded).
inline double factor_distance(const FactorSet& a, const FactorSet& b) {
  if (a.num_modes() != b.num_modes() || a.rank() != b.rank())
    throw std::invalid_argument("factor_distance: incompatible factor sets");
  double acc = 0.0;
  for (int i = 0; i < a.num_modes(); ++i)
    acc += (a.factors[i] - b.factors[i]).squaredNorm();
  return std::sqrt(acc);
}

}  // namespace potensor
