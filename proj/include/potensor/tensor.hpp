#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace potensor {

/// Dense k-way real tensor in row-major layout (last index varies fastest).
/// Immutable after construction; all operations below are pure.
class DenseTensor {
 public:
  DenseTensor(std::vector<int> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.empty()) throw std::invalid_argument("tensor: empty shape");
    std::size_t expected = 1;
    for (int n : shape_) {
      if (n < 1) throw std::invalid_argument("tensor: nonpositive dimension");
      expected *= static_cast<std::size_t>(n);
    }
    if (data_.size() != expected)
      throw std::invalid_argument("tensor: data length does not match shape");
    for (double v : data_)
      if (!std::isfinite(v))
        throw std::invalid_argument("tensor: non-finite entry");
    strides_.resize(shape_.size());
    std::size_t s = 1;
    for (int m = static_cast<int>(shape_.size()) - 1; m >= 0; --m) {
      strides_[m] = s;
      s *= static_cast<std::size_t>(shape_[m]);
    }
  }

  static DenseTensor zeros(std::vector<int> shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(std::max(d, 0));
    return DenseTensor(std::move(shape), std::vector<double>(n, 0.0));
  }

  int order() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  int dim(int mode) const { return shape_.at(mode); }
  const std::vector<double>& data() const { return data_; }
  std::size_t size() const { return data_.size(); }

  double operator()(const std::vector<int>& idx) const {
    return data_[flat_index(idx)];
  }

  std::size_t flat_index(const std::vector<int>& idx) const {
    if (idx.size() != shape_.size())
      throw std::invalid_argument("tensor: index order mismatch");
    std::size_t f = 0;
    for (std::size_t m = 0; m < idx.size(); ++m) {
      if (idx[m] < 0 || idx[m] >= shape_[m])
        throw std::out_of_range("tensor: index out of range");
      f += static_cast<std::size_t>(idx[m]) * strides_[m];
    }
    return f;
  }

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
  std::vector<std::size_t> strides_;
};

namespace detail {

/// Contracts the trailing axis of a row-major block with u.
inline std::vector<double> fold_last(const std::vector<double>& cur,
                                     std::size_t n_outer, int n_last,
                                     const Eigen::VectorXd& u) {
  std::vector<double> out(n_outer, 0.0);
  for (std::size_t o = 0; o < n_outer; ++o) {
    const double* row = cur.data() + o * static_cast<std::size_t>(n_last);
    double acc = 0.0;
    for (int m = 0; m < n_last; ++m) acc += row[m] * u[m];
    out[o] = acc;
  }
  return out;
}

/// Contracts the leading axis of a row-major block with u.
inline std::vector<double> fold_first(const std::vector<double>& cur,
                                      int n_first, std::size_t n_inner,
                                      const Eigen::VectorXd& u) {
  std::vector<double> out(n_inner, 0.0);
  for (int a = 0; a < n_first; ++a) {
    const double ua = u[a];
    const double* blk = cur.data() + static_cast<std::size_t>(a) * n_inner;
    for (std::size_t i = 0; i < n_inner; ++i) out[i] += ua * blk[i];
  }
  return out;
}

inline void check_vector_args(const DenseTensor& A,
                              const std::vector<Eigen::VectorXd>& u) {
  if (static_cast<int>(u.size()) != A.order())
    throw std::invalid_argument("contract: wrong number of vectors");
  for (int m = 0; m < A.order(); ++m)
    if (u[m].size() != A.dim(m))
      throw std::invalid_argument("contract: vector length mismatch");
}

}  // namespace detail

/// <A, u_1 ⊗ ... ⊗ u_k>, folding the last mode first for cache locality.
inline double contract_full(const DenseTensor& A,
                            const std::vector<Eigen::VectorXd>& u) {
  detail::check_vector_args(A, u);
  std::vector<double> cur = A.data();
  std::size_t outer = A.size();
  for (int m = A.order() - 1; m >= 0; --m) {
    outer /= static_cast<std::size_t>(A.dim(m));
    cur = detail::fold_last(cur, outer, A.dim(m), u[m]);
  }
  return cur[0];
}

/// The mode-i partial contraction: returns v with <v, w> equal to the full
/// contraction with u_i replaced by w. The entry u[skip] is ignored.
inline Eigen::VectorXd contract_skip(const DenseTensor& A,
                                     const std::vector<Eigen::VectorXd>& u,
                                     int skip) {
  if (skip < 0 || skip >= A.order())
    throw std::invalid_argument("contract_skip: mode out of range");
  if (static_cast<int>(u.size()) != A.order())
    throw std::invalid_argument("contract_skip: wrong number of vectors");
  for (int m = 0; m < A.order(); ++m)
    if (m != skip && u[m].size() != A.dim(m))
      throw std::invalid_argument("contract_skip: vector length mismatch");

  std::vector<double> cur = A.data();
  std::size_t outer = A.size();
  for (int m = A.order() - 1; m > skip; --m) {
    outer /= static_cast<std::size_t>(A.dim(m));
    cur = detail::fold_last(cur, outer, A.dim(m), u[m]);
  }
  // Remaining block has shape (n_0, ..., n_skip); peel leading axes.
  std::size_t inner = outer / static_cast<std::size_t>(A.dim(0));
  for (int m = 0; m < skip; ++m) {
    cur = detail::fold_first(cur, A.dim(m), inner, u[m]);
    if (m + 1 < skip) inner /= static_cast<std::size_t>(A.dim(m + 1));
  }
  return Eigen::Map<Eigen::VectorXd>(cur.data(), A.dim(skip));
}

/// Multilinear change of basis: result[j_1,...,j_k] contracts A with the
/// j_i-th columns of the M_i. Column counts may differ per mode.
inline DenseTensor multilinear_transform(
    const DenseTensor& A, const std::vector<Eigen::MatrixXd>& M) {
  if (static_cast<int>(M.size()) != A.order())
    throw std::invalid_argument("multilinear_transform: wrong matrix count");
  for (int m = 0; m < A.order(); ++m)
    if (M[m].rows() != A.dim(m))
      throw std::invalid_argument("multilinear_transform: row count mismatch");

  std::vector<double> cur = A.data();
  std::vector<int> dims = A.shape();
  // Mode-by-mode product with M_m^T, processed as (pre, a, post) blocks.
  for (int m = 0; m < A.order(); ++m) {
    const int n_old = dims[m];
    const int n_new = static_cast<int>(M[m].cols());
    std::size_t pre = 1, post = 1;
    for (int t = 0; t < m; ++t) pre *= static_cast<std::size_t>(dims[t]);
    for (std::size_t t = m + 1; t < dims.size(); ++t)
      post *= static_cast<std::size_t>(dims[t]);
    std::vector<double> next(pre * static_cast<std::size_t>(n_new) * post, 0.0);
    for (std::size_t p = 0; p < pre; ++p) {
      const double* src = cur.data() + p * static_cast<std::size_t>(n_old) * post;
      double* dst = next.data() + p * static_cast<std::size_t>(n_new) * post;
      for (int a = 0; a < n_old; ++a)
        for (int j = 0; j < n_new; ++j) {
          const double w = M[m](a, j);
          if (w == 0.0) continue;
          const double* s = src + static_cast<std::size_t>(a) * post;
          double* d = dst + static_cast<std::size_t>(j) * post;
          for (std::size_t q = 0; q < post; ++q) d[q] += w * s[q];
        }
    }
    cur = std::move(next);
    dims[m] = n_new;
  }
  return DenseTensor(dims, std::move(cur));
}

/// Diagonal of a cubical tensor: (T[j,...,j])_j.
inline Eigen::VectorXd diag_k(const DenseTensor& T) {
  const int r = T.dim(0);
  for (int m = 1; m < T.order(); ++m)
    if (T.dim(m) != r) throw std::invalid_argument("diag_k: not cubical");
  Eigen::VectorXd d(r);
  std::vector<int> idx(T.order());
  for (int j = 0; j < r; ++j) {
    std::fill(idx.begin(), idx.end(), j);
    d[j] = T(idx);
  }
  return d;
}

/// Σ_j lambda_j · (outer product of the j-th factor columns).
inline DenseTensor rank1_sum(const std::vector<Eigen::MatrixXd>& factors,
                             const Eigen::VectorXd& lambda) {
  if (factors.empty()) throw std::invalid_argument("rank1_sum: no factors");
  const int r = static_cast<int>(lambda.size());
  std::vector<int> dims;
  for (const auto& U : factors) {
    if (U.cols() != r)
      throw std::invalid_argument("rank1_sum: rank mismatch across factors");
    dims.push_back(static_cast<int>(U.rows()));
  }
  std::size_t total = 1;
  for (int d : dims) total *= static_cast<std::size_t>(d);
  std::vector<double> out(total, 0.0);
  std::vector<double> term;
  for (int j = 0; j < r; ++j) {
    term.assign(1, lambda[j]);
    for (const auto& U : factors) {
      const int n = static_cast<int>(U.rows());
      std::vector<double> next(term.size() * static_cast<std::size_t>(n));
      std::size_t w = 0;
      for (double t : term)
        for (int a = 0; a < n; ++a) next[w++] = t * U(a, j);
      term = std::move(next);
    }
    for (std::size_t i = 0; i < total; ++i) out[i] += term[i];
  }
  return DenseTensor(dims, std::move(out));
}

inline double inner(const DenseTensor& A, const DenseTensor& B) {
  if (A.shape() != B.shape())
    throw std::invalid_argument("inner: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) acc += A.data()[i] * B.data()[i];
  return acc;
}

inline double frobenius(const DenseTensor& A) {
  return std::sqrt(inner(A, A));
}

inline DenseTensor subtract(const DenseTensor& A, const DenseTensor& B) {
  if (A.shape() != B.shape())
    throw std::invalid_argument("subtract: shape mismatch");
  std::vector<double> d(A.size());
  for (std::size_t i = 0; i < A.size(); ++i)
    d[i] = A.data()[i] - B.data()[i];
  return DenseTensor(A.shape(), std::move(d));
}

}  // namespace potensor
