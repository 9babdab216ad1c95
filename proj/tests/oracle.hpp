#pragma once

// Test-only reference implementations, kept independent of the kernels they
// check: dense materialization of sparse matrices, triple-loop matmul,
// per-edge attention computed straight from the definition, and a central
// finite-difference probe.

#include <cmath>
#include <functional>
#include <vector>

#include "sgnn/dense.hpp"
#include "sgnn/graph.hpp"
#include "sgnn/pattern.hpp"
#include "sgnn/rng.hpp"
#include "sgnn/sparse.hpp"

namespace sgnn::oracle {

template <class S>
DenseMatrix<S> to_dense(const SparseMatrix<S>& m) {
  CooMatrix<S> coo = to_coo(m);
  DenseMatrix<S> d = DenseMatrix<S>::zeros(coo.n_rows, coo.n_cols);
  S* dd = d.mutable_data();
  for (index_t e = 0; e < coo.nnz(); ++e) {
    const std::size_t i = static_cast<std::size_t>(e);
    dd[static_cast<std::size_t>(coo.rows[i]) * coo.n_cols + coo.cols[i]] = coo.vals[i];
  }
  return d;
}

template <class S>
DenseMatrix<S> matmul(const DenseMatrix<S>& A, const DenseMatrix<S>& B) {
  DenseMatrix<S> C = DenseMatrix<S>::zeros(A.rows(), B.cols());
  S* cd = C.mutable_data();
  for (index_t i = 0; i < A.rows(); ++i)
    for (index_t j = 0; j < B.cols(); ++j) {
      S acc = S(0);
      for (index_t l = 0; l < A.cols(); ++l) acc += A(i, l) * B(l, j);
      cd[static_cast<std::size_t>(i) * B.cols() + j] = acc;
    }
  return C;
}

template <class S>
DenseMatrix<S> transpose_dense(const DenseMatrix<S>& A) {
  DenseMatrix<S> T(A.cols(), A.rows());
  S* td = T.mutable_data();
  for (index_t i = 0; i < A.rows(); ++i)
    for (index_t j = 0; j < A.cols(); ++j)
      td[static_cast<std::size_t>(j) * A.rows() + i] = A(i, j);
  return T;
}

// Random sparse matrix with entries in [0.1, 1] (positive, so it doubles as a
// weighted adjacency for normalization tests).
template <class S>
CooMatrix<S> random_sparse(index_t n_rows, index_t n_cols, double density, std::uint64_t seed,
                           double lo = 0.1, double hi = 1.0) {
  Rng rng(seed);
  std::vector<Triplet<S>> ts;
  for (index_t i = 0; i < n_rows; ++i)
    for (index_t j = 0; j < n_cols; ++j)
      if (rng.next_double() < density)
        ts.push_back({i, j, static_cast<S>(rng.next_double(lo, hi))});
  return coo_from_triplets(n_rows, n_cols, std::move(ts));
}

// Random square pattern that contains every self loop, as a CSR matrix with
// the given values range.
template <class S>
CsrMatrix<S> random_self_loop_graph(index_t n, double density, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Triplet<S>> ts;
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < n; ++j)
      if (i == j || rng.next_double() < density)
        ts.push_back({i, j, static_cast<S>(rng.next_double(0.1, 1.0))});
  return coo_to_csr(coo_from_triplets(n, n, std::move(ts)));
}

inline double central_difference(const std::function<double(double)>& f, double x, double eps) {
  return (f(x + eps) - f(x - eps)) / (2.0 * eps);
}

}  // namespace sgnn::oracle

#include "sgnn/gat.hpp"

namespace sgnn::oracle {

// GAT forward computed straight from the definition with plain loops: per
// edge (i, j) the raw score is a^T [Theta^T x_i || Theta^T x_j], LeakyReLU,
// an unstabilized softmax over each row group, then X'_t = A_t M_t + b_t.
inline DenseMatrix<double> naive_gat_forward(const DenseMatrix<double>& X,
                                             const PatternPtr& pattern,
                                             const GatParams<double>& p, double beta) {
  const index_t n = X.rows(), m = X.cols(), h = p.heads, k = p.out_features;
  DenseMatrix<double> out = DenseMatrix<double>::zeros(n, h * k);
  const index_t* rp = pattern->rowptr();
  const index_t* cols = pattern->cols();
  for (index_t t = 0; t < h; ++t) {
    DenseMatrix<double> M = DenseMatrix<double>::zeros(n, k);
    for (index_t i = 0; i < n; ++i)
      for (index_t c = 0; c < k; ++c) {
        double acc = 0;
        for (index_t l = 0; l < m; ++l) acc += X(i, l) * p.theta(l, t * k + c);
        M.mutable_data()[static_cast<std::size_t>(i) * k + c] = acc;
      }
    for (index_t i = 0; i < n; ++i) {
      std::vector<double> w;
      for (index_t e = rp[i]; e < rp[i + 1]; ++e) {
        const index_t j = cols[e];
        double y = 0;
        for (index_t c = 0; c < k; ++c)
          y += p.a_src(t, c) * M(i, c) + p.a_dst(t, c) * M(j, c);
        w.push_back(y > 0 ? y : beta * y);
      }
      double z = 0;
      for (double x : w) z += std::exp(x);
      for (index_t e = rp[i]; e < rp[i + 1]; ++e) {
        const double alpha = std::exp(w[static_cast<std::size_t>(e - rp[i])]) / z;
        const index_t j = cols[e];
        for (index_t c = 0; c < k; ++c)
          out.mutable_data()[static_cast<std::size_t>(i) * h * k + t * k + c] +=
              alpha * M(j, c);
      }
      for (index_t c = 0; c < k; ++c)
        out.mutable_data()[static_cast<std::size_t>(i) * h * k + t * k + c] +=
            p.bias[static_cast<std::size_t>(t) * k + c];
    }
  }
  return out;
}

}  // namespace sgnn::oracle
