#pragma once

// Sparse kernels: SpMM for every format, SDDMM, their semi-batched multi-head
// variants over a shared pattern, edge-score assembly and the sparse row
// softmax with backward.
//
// Determinism: every output element is accumulated in a fixed order that does
// not depend on the thread count. Row-grouped formats parallelize over rows;
// column-grouped traversals partition output rows and scan, so no atomics or
// merge buffers are needed.

#include <cmath>
#include <memory>

#include "sgnn/cost.hpp"
#include "sgnn/counters.hpp"
#include "sgnn/dense.hpp"
#include "sgnn/pattern.hpp"
#include "sgnn/sparse.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sgnn {

// ---------------------------------------------------------------------------
// SpMM: C = A * B
// ---------------------------------------------------------------------------

namespace detail {

template <class S>
void spmm_csr_into(const CsrMatrix<S>& A, const DenseMatrix<S>& B, DenseMatrix<S>& C) {
  const index_t n = A.n_rows, f = B.cols();
  const index_t* rp = A.rowptr.data();
  const index_t* cols = A.cols.data();
  const S* vals = A.vals.data();
  const S* bd = B.data();
  S* cd = C.mutable_data();
  const int nt = clamp_threads(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
#endif
  for (index_t i = 0; i < n; ++i) {
    S* crow = cd + static_cast<std::size_t>(i) * f;
    for (index_t e = rp[i]; e < rp[i + 1]; ++e) {
      const S v = vals[e];
      const S* brow = bd + static_cast<std::size_t>(cols[e]) * f;
      for (index_t c = 0; c < f; ++c) crow[c] += v * brow[c];
    }
  }
}

// Output rows are partitioned across threads; every thread scans all columns
// and accumulates only its own rows, so per-row order is always column order.
template <class S>
void spmm_csc_into(const CscMatrix<S>& A, const DenseMatrix<S>& B, DenseMatrix<S>& C) {
  const index_t n = A.n_rows, f = B.cols();
  const index_t* cp = A.colptr.data();
  const index_t* rows = A.rows.data();
  const S* vals = A.vals.data();
  const S* bd = B.data();
  S* cd = C.mutable_data();
  const int nt = clamp_threads(n);
#ifdef _OPENMP
#pragma omp parallel num_threads(nt) if (nt > 1)
#endif
  {
#ifdef _OPENMP
    const int tid = omp_get_thread_num();
    const int tcount = omp_get_num_threads();
#else
    const int tid = 0, tcount = 1;
#endif
    const index_t r0 = static_cast<index_t>((static_cast<count_t>(n) * tid) / tcount);
    const index_t r1 = static_cast<index_t>((static_cast<count_t>(n) * (tid + 1)) / tcount);
    for (index_t j = 0; j < A.n_cols; ++j) {
      const S* brow = bd + static_cast<std::size_t>(j) * f;
      for (index_t e = cp[j]; e < cp[j + 1]; ++e) {
        const index_t i = rows[e];
        if (i < r0 || i >= r1) continue;
        const S v = vals[e];
        S* crow = cd + static_cast<std::size_t>(i) * f;
        for (index_t c = 0; c < f; ++c) crow[c] += v * brow[c];
      }
    }
  }
}

// Canonical COO is row-grouped, so threads take contiguous entry ranges
// aligned to row boundaries.
template <class S>
void spmm_coo_into(const CooMatrix<S>& A, const DenseMatrix<S>& B, DenseMatrix<S>& C) {
  const index_t q = A.nnz(), f = B.cols();
  const index_t* rows = A.rows.data();
  const index_t* cols = A.cols.data();
  const S* vals = A.vals.data();
  const S* bd = B.data();
  S* cd = C.mutable_data();
  const int nt = clamp_threads(q);
#ifdef _OPENMP
#pragma omp parallel num_threads(nt) if (nt > 1)
#endif
  {
#ifdef _OPENMP
    const int tid = omp_get_thread_num();
    const int tcount = omp_get_num_threads();
#else
    const int tid = 0, tcount = 1;
#endif
    const index_t r0 = static_cast<index_t>((static_cast<count_t>(A.n_rows) * tid) / tcount);
    const index_t r1 = static_cast<index_t>((static_cast<count_t>(A.n_rows) * (tid + 1)) / tcount);
    const index_t* lo = std::lower_bound(rows, rows + q, r0);
    for (const index_t* re = lo; re != rows + q && *re < r1; ++re) {
      const index_t e = static_cast<index_t>(re - rows);
      const S v = vals[e];
      const S* brow = bd + static_cast<std::size_t>(cols[e]) * f;
      S* crow = cd + static_cast<std::size_t>(rows[e]) * f;
      for (index_t c = 0; c < f; ++c) crow[c] += v * brow[c];
    }
  }
}

template <class S>
void spmm_ellpack_into(const EllpackMatrix<S>& A, const DenseMatrix<S>& B, DenseMatrix<S>& C) {
  const index_t n = A.n_rows, p = A.width, f = B.cols();
  const index_t* ci = A.col_idx.data();
  const S* vals = A.vals.data();
  const S* bd = B.data();
  S* cd = C.mutable_data();
  const int nt = clamp_threads(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
#endif
  for (index_t i = 0; i < n; ++i) {
    S* crow = cd + static_cast<std::size_t>(i) * f;
    for (index_t s = 0; s < p; ++s) {
      const std::size_t at = static_cast<std::size_t>(i) * p + s;
      const index_t col = ci[at];
      if (col == A.n_cols) continue;  // padding sentinel
      const S v = vals[at];
      const S* brow = bd + static_cast<std::size_t>(col) * f;
      for (index_t c = 0; c < f; ++c) crow[c] += v * brow[c];
    }
  }
}

template <class S>
void charge_spmm(const SparseMatrix<S>& A, index_t f) {
  const count_t n = sparse_rows(A);
  const count_t q = sparse_nnz(A);
  counters().spmm_flops += 2 * q * f;
  CostEstimate est;
  if (const auto* h = std::get_if<HybridCsrCoo<S>>(&A)) {
    est = spmm_cost_hybrid(n, h->csr_part.nnz(), h->coo_part.nnz(), f, sizeof(S));
  } else {
    count_t p = 0;
    if (const auto* e = std::get_if<EllpackMatrix<S>>(&A)) p = e->width;
    est = spmm_cost(format_of(A), n, q, p, f, sizeof(S));
  }
  counters().model_bytes += est.bytes;
}

}  // namespace detail

template <class S>
DenseMatrix<S> spmm(const SparseMatrix<S>& A, const DenseMatrix<S>& B) {
  require(sparse_cols(A) == B.rows(), "spmm: dimension mismatch");
  detail::charge_spmm(A, B.cols());
  DenseMatrix<S> C = DenseMatrix<S>::zeros(sparse_rows(A), B.cols());
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, CsrMatrix<S>>) detail::spmm_csr_into(x, B, C);
        else if constexpr (std::is_same_v<T, CscMatrix<S>>) detail::spmm_csc_into(x, B, C);
        else if constexpr (std::is_same_v<T, CooMatrix<S>>) detail::spmm_coo_into(x, B, C);
        else if constexpr (std::is_same_v<T, EllpackMatrix<S>>) detail::spmm_ellpack_into(x, B, C);
        else {
          detail::spmm_csr_into(x.csr_part, B, C);
          detail::spmm_coo_into(x.coo_part, B, C);
        }
      },
      A);
  return C;
}

// Preprocessed adjacency operator: the stored matrix plus its transpose for
// the backward pass. CSR/CSC transposes reinterpret the same buffers; the
// other formats materialize the transpose once at construction.
template <class S>
class AdjacencyOp {
 public:
  AdjacencyOp() = default;
  explicit AdjacencyOp(SparseMatrix<S> A)
      : fwd_(std::move(A)), bwd_(transpose_any(fwd_)) {}

  index_t n_rows() const { return sparse_rows(fwd_); }
  index_t n_cols() const { return sparse_cols(fwd_); }
  index_t nnz() const { return sparse_nnz(fwd_); }
  SparseFormat format() const { return format_of(fwd_); }
  const SparseMatrix<S>& matrix() const { return fwd_; }
  const SparseMatrix<S>& transposed_matrix() const { return bwd_; }

  DenseMatrix<S> multiply(const DenseMatrix<S>& B) const { return spmm(fwd_, B); }
  DenseMatrix<S> multiply_transposed(const DenseMatrix<S>& B) const { return spmm(bwd_, B); }

 private:
  SparseMatrix<S> fwd_;
  SparseMatrix<S> bwd_;
};

// ---------------------------------------------------------------------------
// Semi-batched SpMM over a shared pattern: per head t,
// C[:,t,:] = A_t * B[:,t,:], with B and C stored as n x (h*k) slabs (head is
// the middle dimension of the logical n x h x k tensor).
// ---------------------------------------------------------------------------

template <class S>
DenseMatrix<S> spmm_semibatched(const EdgeValues<S>& A, const DenseMatrix<S>& B, index_t k) {
  const SparsePattern& pat = *A.pattern;
  const index_t n = pat.n(), h = A.heads;
  require(B.rows() == n && B.cols() == h * k, "spmm_semibatched: operand shape mismatch");
  counters().spmm_flops += 2 * static_cast<count_t>(pat.nnz()) * h * k;
  counters().model_bytes += static_cast<count_t>(sizeof(S)) *
                                (static_cast<count_t>(h) * pat.nnz() +
                                 3 * static_cast<count_t>(n) * h * k) +
                            4 * (static_cast<count_t>(pat.nnz()) + n + 1);

  DenseMatrix<S> C = DenseMatrix<S>::zeros(n, h * k);
  const index_t* rp = pat.rowptr();
  const index_t* cols = pat.cols();
  const S* av = A.vals.data();
  const S* bd = B.data();
  S* cd = C.mutable_data();
  const index_t q = pat.nnz();
  const int nt = detail::clamp_threads(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
#endif
  for (index_t i = 0; i < n; ++i) {
    S* crow = cd + static_cast<std::size_t>(i) * h * k;
    for (index_t t = 0; t < h; ++t) {
      const S* ahead = av + static_cast<std::size_t>(t) * q;
      S* cslab = crow + static_cast<std::size_t>(t) * k;
      for (index_t e = rp[i]; e < rp[i + 1]; ++e) {
        const S v = ahead[e];
        const S* bslab = bd + (static_cast<std::size_t>(cols[e]) * h + t) * k;
        for (index_t c = 0; c < k; ++c) cslab[c] += v * bslab[c];
      }
    }
  }
  return C;
}

// C[:,t,:] = A_t^T * B[:,t,:] via the column-grouped traversal of the shared
// pattern; values are looked up through the canonical-order permutation.
template <class S>
DenseMatrix<S> spmm_semibatched_transposed(const EdgeValues<S>& A, const DenseMatrix<S>& B,
                                           index_t k) {
  const SparsePattern& pat = *A.pattern;
  const index_t n = pat.n(), h = A.heads;
  require(B.rows() == n && B.cols() == h * k, "spmm_semibatched_transposed: shape mismatch");
  counters().spmm_flops += 2 * static_cast<count_t>(pat.nnz()) * h * k;
  counters().model_bytes += static_cast<count_t>(sizeof(S)) *
                                (static_cast<count_t>(h) * pat.nnz() +
                                 3 * static_cast<count_t>(n) * h * k) +
                            4 * (static_cast<count_t>(pat.nnz()) + n + 1);

  DenseMatrix<S> C = DenseMatrix<S>::zeros(n, h * k);
  const index_t* cp = pat.colptr();
  const index_t* rows = pat.rows();
  const index_t* perm = pat.perm();
  const S* av = A.vals.data();
  const S* bd = B.data();
  S* cd = C.mutable_data();
  const index_t q = pat.nnz();
  const int nt = detail::clamp_threads(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
#endif
  for (index_t j = 0; j < n; ++j) {
    S* crow = cd + static_cast<std::size_t>(j) * h * k;
    for (index_t t = 0; t < h; ++t) {
      const S* ahead = av + static_cast<std::size_t>(t) * q;
      S* cslab = crow + static_cast<std::size_t>(t) * k;
      for (index_t e = cp[j]; e < cp[j + 1]; ++e) {
        const S v = ahead[perm[e]];
        const S* bslab = bd + (static_cast<std::size_t>(rows[e]) * h + t) * k;
        for (index_t c = 0; c < k; ++c) cslab[c] += v * bslab[c];
      }
    }
  }
  return C;
}

// ---------------------------------------------------------------------------
// SDDMM: out_ij = scale_ij * dot(B row i, C column j) on the pattern
// ---------------------------------------------------------------------------

template <class S>
EdgeValues<S> sddmm(const PatternPtr& pattern, const EdgeValues<S>* scale,
                    const DenseMatrix<S>& B, const DenseMatrix<S>& C) {
  const SparsePattern& pat = *pattern;
  require(B.cols() == C.rows(), "sddmm: inner dimension mismatch");
  require(B.rows() == pat.n() && C.cols() == pat.n(), "sddmm: outer dimension mismatch");
  if (scale) {
    require(scale->pattern.get() == pattern.get() && scale->heads == 1,
            "sddmm: scale must share the pattern with one head");
  }
  const index_t f = B.cols();
  counters().sddmm_flops += static_cast<count_t>(pat.nnz()) * (2 * f + 1);
  counters().model_bytes += sddmm_cost(SparseFormat::csr, pat.n(), pat.nnz(), 0, f, sizeof(S)).bytes;

  EdgeValues<S> out = EdgeValues<S>::uninitialized(pattern, 1);
  const index_t* rp = pat.rowptr();
  const index_t* cols = pat.cols();
  const S* bd = B.data();
  const S* cd = C.data();
  const S* sv = scale ? scale->vals.data() : nullptr;
  S* ov = out.vals.mutable_data();
  const index_t n = pat.n(), ldc = C.cols();
  const int nt = detail::clamp_threads(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
#endif
  for (index_t i = 0; i < n; ++i) {
    const S* brow = bd + static_cast<std::size_t>(i) * f;
    for (index_t e = rp[i]; e < rp[i + 1]; ++e) {
      const index_t j = cols[e];
      S acc = S(0);
      for (index_t l = 0; l < f; ++l) acc += brow[l] * cd[static_cast<std::size_t>(l) * ldc + j];
      ov[e] = (sv ? sv[e] : S(1)) * acc;
    }
  }
  return out;
}

// Semi-batched sampled product without scaling: per head t and edge (i, j),
// out[t,e] = dot(A[i,t,:], B[j,t,:]). Used for dAlpha = dX' M^T.
template <class S>
EdgeValues<S> sddmm_semibatched(const PatternPtr& pattern, const DenseMatrix<S>& A,
                                const DenseMatrix<S>& B, index_t heads, index_t k) {
  const SparsePattern& pat = *pattern;
  require(A.rows() == pat.n() && B.rows() == pat.n() && A.cols() == heads * k &&
              B.cols() == heads * k,
          "sddmm_semibatched: shape mismatch");
  counters().sddmm_flops += static_cast<count_t>(pat.nnz()) * heads * (2 * k + 1);
  counters().model_bytes += static_cast<count_t>(sizeof(S)) *
                                (static_cast<count_t>(pat.nnz()) * heads * (k + 1)) +
                            4 * (static_cast<count_t>(pat.nnz()) + pat.n() + 1);

  EdgeValues<S> out = EdgeValues<S>::uninitialized(pattern, heads);
  const index_t* rp = pat.rowptr();
  const index_t* cols = pat.cols();
  const S* ad = A.data();
  const S* bd = B.data();
  S* ov = out.vals.mutable_data();
  const index_t n = pat.n(), q = pat.nnz();
  const int nt = detail::clamp_threads(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
#endif
  for (index_t i = 0; i < n; ++i) {
    for (index_t e = rp[i]; e < rp[i + 1]; ++e) {
      const index_t j = cols[e];
      for (index_t t = 0; t < heads; ++t) {
        const S* arow = ad + (static_cast<std::size_t>(i) * heads + t) * k;
        const S* brow = bd + (static_cast<std::size_t>(j) * heads + t) * k;
        S acc = S(0);
        for (index_t c = 0; c < k; ++c) acc += arow[c] * brow[c];
        ov[static_cast<std::size_t>(t) * q + e] = acc;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Attention score assembly and sparse softmax
// ---------------------------------------------------------------------------

// s[i,t] = dot(a_src[t,:], M[i,t,:]), d likewise. M is the n x (h*k) slab.
template <class S>
NodeScores<S> node_scores(const DenseMatrix<S>& M, const DenseMatrix<S>& a_src,
                          const DenseMatrix<S>& a_dst, index_t heads, index_t k) {
  const index_t n = M.rows();
  require(M.cols() == heads * k, "node_scores: M shape mismatch");
  require(a_src.rows() == heads && a_src.cols() == k && a_dst.rows() == heads &&
              a_dst.cols() == k,
          "node_scores: attention vector shape mismatch");
  counters().gemm_flops += 4 * static_cast<count_t>(n) * heads * k;
  counters().model_bytes += static_cast<count_t>(sizeof(S)) *
                            (static_cast<count_t>(n) * heads * k + 2 * static_cast<count_t>(n) * heads);

  NodeScores<S> out;
  out.src = DenseMatrix<S>(n, heads);
  out.dst = DenseMatrix<S>(n, heads);
  const S* md = M.data();
  const S* asd = a_src.data();
  const S* add = a_dst.data();
  S* sd = out.src.mutable_data();
  S* dd = out.dst.mutable_data();
  const int nt = detail::clamp_threads(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
#endif
  for (index_t i = 0; i < n; ++i) {
    for (index_t t = 0; t < heads; ++t) {
      const S* mrow = md + (static_cast<std::size_t>(i) * heads + t) * k;
      const S* as = asd + static_cast<std::size_t>(t) * k;
      const S* ad2 = add + static_cast<std::size_t>(t) * k;
      S s = S(0), d = S(0);
      for (index_t c = 0; c < k; ++c) {
        s += as[c] * mrow[c];
        d += ad2[c] * mrow[c];
      }
      sd[static_cast<std::size_t>(i) * heads + t] = s;
      dd[static_cast<std::size_t>(i) * heads + t] = d;
    }
  }
  return out;
}

// y[t, e=(i,j)] = s[i,t] + d[j,t]
template <class S>
EdgeValues<S> edge_scores(const PatternPtr& pattern, const NodeScores<S>& scores) {
  const SparsePattern& pat = *pattern;
  const index_t h = scores.src.cols();
  require(scores.src.rows() == pat.n() && scores.dst.rows() == pat.n(),
          "edge_scores: node count mismatch");
  counters().edge_flops += static_cast<count_t>(pat.nnz()) * h;
  counters().model_bytes += static_cast<count_t>(sizeof(S)) *
                            (static_cast<count_t>(pat.nnz()) * h + 2 * static_cast<count_t>(pat.n()) * h);

  EdgeValues<S> out = EdgeValues<S>::uninitialized(pattern, h);
  const index_t* rp = pat.rowptr();
  const index_t* cols = pat.cols();
  const S* sd = scores.src.data();
  const S* dd = scores.dst.data();
  S* ov = out.vals.mutable_data();
  const index_t n = pat.n(), q = pat.nnz();
  for (index_t t = 0; t < h; ++t) {
    S* ohead = ov + static_cast<std::size_t>(t) * q;
    for (index_t i = 0; i < n; ++i) {
      const S si = sd[static_cast<std::size_t>(i) * h + t];
      for (index_t e = rp[i]; e < rp[i + 1]; ++e)
        ohead[e] = si + dd[static_cast<std::size_t>(cols[e]) * h + t];
    }
  }
  return out;
}

template <class S>
struct EdgeActivation {
  EdgeValues<S> out;
  EdgeMask mask;
};

template <class S>
EdgeActivation<S> leaky_relu_edges(const EdgeValues<S>& y, double beta) {
  require(beta > 0, "leaky_relu_edges: beta must be positive");
  counters().edge_flops += static_cast<count_t>(y.heads) * y.nnz();
  EdgeActivation<S> r;
  r.out = EdgeValues<S>::uninitialized(y.pattern, y.heads);
  r.mask = EdgeMask::allocate(y.pattern, y.heads);
  const S* yv = y.vals.data();
  S* wv = r.out.vals.mutable_data();
  std::uint8_t* mb = r.mask.bits.mutable_data();
  const S b = static_cast<S>(beta);
  const std::size_t total = static_cast<std::size_t>(y.heads) * y.nnz();
  for (std::size_t i = 0; i < total; ++i) {
    const bool pos = yv[i] > S(0);
    mb[i] = pos ? 1 : 0;
    wv[i] = pos ? yv[i] : b * yv[i];
  }
  return r;
}

// f'(y) = 1 where mask, beta otherwise (the mask records y > 0).
template <class S>
EdgeValues<S> leaky_relu_edges_backward(const EdgeValues<S>& grad_w, const EdgeMask& mask,
                                        double beta) {
  require(grad_w.pattern.get() == mask.pattern.get() && grad_w.heads == mask.heads,
          "leaky_relu_edges_backward: pattern mismatch");
  counters().edge_flops += static_cast<count_t>(grad_w.heads) * grad_w.nnz();
  EdgeValues<S> out = EdgeValues<S>::uninitialized(grad_w.pattern, grad_w.heads);
  const S* gv = grad_w.vals.data();
  const std::uint8_t* mb = mask.bits.data();
  S* ov = out.vals.mutable_data();
  const S b = static_cast<S>(beta);
  const std::size_t total = static_cast<std::size_t>(grad_w.heads) * grad_w.nnz();
  for (std::size_t i = 0; i < total; ++i) ov[i] = mb[i] ? gv[i] : b * gv[i];
  return out;
}

// Row-group softmax with max subtraction: for each node i and head t,
// alpha_ie = exp(w_ie - max) / sum over the group {(i, u): u in N(i) + {i}}.
// The pattern must contain every self loop so no group is empty.
template <class S>
EdgeValues<S> edge_softmax(const EdgeValues<S>& w) {
  const SparsePattern& pat = *w.pattern;
  require(pat.has_all_self_loops(), "edge_softmax: pattern must contain all self loops");
  counters().edge_flops += 5 * static_cast<count_t>(w.heads) * w.nnz();
  counters().model_bytes +=
      2 * static_cast<count_t>(sizeof(S)) * static_cast<count_t>(w.heads) * w.nnz();

  EdgeValues<S> out = EdgeValues<S>::uninitialized(w.pattern, w.heads);
  const index_t* rp = pat.rowptr();
  const S* wv = w.vals.data();
  S* ov = out.vals.mutable_data();
  const index_t n = pat.n(), q = pat.nnz(), h = w.heads;
  const int nt = detail::clamp_threads(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
#endif
  for (index_t i = 0; i < n; ++i) {
    for (index_t t = 0; t < h; ++t) {
      const S* whead = wv + static_cast<std::size_t>(t) * q;
      S* ohead = ov + static_cast<std::size_t>(t) * q;
      S gmax = whead[rp[i]];
      for (index_t e = rp[i] + 1; e < rp[i + 1]; ++e) gmax = std::max(gmax, whead[e]);
      S sum = S(0);
      for (index_t e = rp[i]; e < rp[i + 1]; ++e) {
        const S x = std::exp(whead[e] - gmax);
        ohead[e] = x;
        sum += x;
      }
      const S inv = S(1) / sum;
      for (index_t e = rp[i]; e < rp[i + 1]; ++e) ohead[e] *= inv;
    }
  }
  return out;
}

// dw_ie = alpha_ie * (dalpha_ie - sum_u alpha_iu dalpha_iu), per group and head.
template <class S>
EdgeValues<S> edge_softmax_backward(const EdgeValues<S>& alpha, const EdgeValues<S>& grad_alpha) {
  require(alpha.pattern.get() == grad_alpha.pattern.get() && alpha.heads == grad_alpha.heads,
          "edge_softmax_backward: pattern mismatch");
  const SparsePattern& pat = *alpha.pattern;
  counters().edge_flops += 4 * static_cast<count_t>(alpha.heads) * alpha.nnz();
  counters().model_bytes +=
      3 * static_cast<count_t>(sizeof(S)) * static_cast<count_t>(alpha.heads) * alpha.nnz();

  EdgeValues<S> out = EdgeValues<S>::uninitialized(alpha.pattern, alpha.heads);
  const index_t* rp = pat.rowptr();
  const S* av = alpha.vals.data();
  const S* gv = grad_alpha.vals.data();
  S* ov = out.vals.mutable_data();
  const index_t n = pat.n(), q = pat.nnz(), h = alpha.heads;
  const int nt = detail::clamp_threads(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
#endif
  for (index_t i = 0; i < n; ++i) {
    for (index_t t = 0; t < h; ++t) {
      const S* ahead = av + static_cast<std::size_t>(t) * q;
      const S* ghead = gv + static_cast<std::size_t>(t) * q;
      S* ohead = ov + static_cast<std::size_t>(t) * q;
      S dot = S(0);
      for (index_t e = rp[i]; e < rp[i + 1]; ++e) dot += ahead[e] * ghead[e];
      for (index_t e = rp[i]; e < rp[i + 1]; ++e) ohead[e] = ahead[e] * (ghead[e] - dot);
    }
  }
  return out;
}

// Row sums per head: out[i,t] = sum over edges of row i.
template <class S>
DenseMatrix<S> edge_row_sums(const EdgeValues<S>& ev) {
  const SparsePattern& pat = *ev.pattern;
  counters().edge_flops += static_cast<count_t>(ev.heads) * ev.nnz();
  DenseMatrix<S> out = DenseMatrix<S>::zeros(pat.n(), ev.heads);
  const index_t* rp = pat.rowptr();
  const S* v = ev.vals.data();
  S* od = out.mutable_data();
  const index_t q = pat.nnz();
  for (index_t t = 0; t < ev.heads; ++t) {
    const S* head = v + static_cast<std::size_t>(t) * q;
    for (index_t i = 0; i < pat.n(); ++i) {
      S acc = S(0);
      for (index_t e = rp[i]; e < rp[i + 1]; ++e) acc += head[e];
      od[static_cast<std::size_t>(i) * ev.heads + t] = acc;
    }
  }
  return out;
}

// out[t,:] = sum_i coeff[i,t] * M[i,t,:] -- the per-head M^T * dscore products
// that produce attention parameter gradients.
template <class S>
DenseMatrix<S> attention_param_grad(const DenseMatrix<S>& M, const DenseMatrix<S>& coeff,
                                    index_t heads, index_t k) {
  const index_t n = M.rows();
  require(M.cols() == heads * k && coeff.rows() == n && coeff.cols() == heads,
          "attention_param_grad: shape mismatch");
  counters().gemm_flops += 2 * static_cast<count_t>(n) * heads * k;
  DenseMatrix<S> out = DenseMatrix<S>::zeros(heads, k);
  const S* md = M.data();
  const S* cd = coeff.data();
  S* od = out.mutable_data();
  for (index_t i = 0; i < n; ++i)
    for (index_t t = 0; t < heads; ++t) {
      const S c = cd[static_cast<std::size_t>(i) * heads + t];
      const S* mrow = md + (static_cast<std::size_t>(i) * heads + t) * k;
      S* orow = od + static_cast<std::size_t>(t) * k;
      for (index_t cc = 0; cc < k; ++cc) orow[cc] += c * mrow[cc];
    }
  return out;
}

// out[i,t,:] += coeff[i,t] * vec[t,:] for every node and head.
template <class S>
void add_scaled_rows_inplace(DenseMatrix<S>& out, const DenseMatrix<S>& coeff,
                             const DenseMatrix<S>& vec, index_t heads, index_t k) {
  const index_t n = out.rows();
  require(out.cols() == heads * k && coeff.rows() == n && coeff.cols() == heads &&
              vec.rows() == heads && vec.cols() == k,
          "add_scaled_rows_inplace: shape mismatch");
  counters().elementwise_flops += 2 * static_cast<count_t>(n) * heads * k;
  S* od = out.mutable_data();
  const S* cd = coeff.data();
  const S* vd = vec.data();
  const int nt = detail::clamp_threads(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
#endif
  for (index_t i = 0; i < n; ++i)
    for (index_t t = 0; t < heads; ++t) {
      const S c = cd[static_cast<std::size_t>(i) * heads + t];
      S* orow = od + (static_cast<std::size_t>(i) * heads + t) * k;
      const S* vrow = vd + static_cast<std::size_t>(t) * k;
      for (index_t cc = 0; cc < k; ++cc) orow[cc] += c * vrow[cc];
    }
}

// Column sums per head via the column-grouped traversal: out[j,t].
template <class S>
DenseMatrix<S> edge_col_sums(const EdgeValues<S>& ev) {
  const SparsePattern& pat = *ev.pattern;
  counters().edge_flops += static_cast<count_t>(ev.heads) * ev.nnz();
  DenseMatrix<S> out = DenseMatrix<S>::zeros(pat.n(), ev.heads);
  const index_t* cp = pat.colptr();
  const index_t* perm = pat.perm();
  const S* v = ev.vals.data();
  S* od = out.mutable_data();
  const index_t q = pat.nnz();
  for (index_t t = 0; t < ev.heads; ++t) {
    const S* head = v + static_cast<std::size_t>(t) * q;
    for (index_t j = 0; j < pat.n(); ++j) {
      S acc = S(0);
      for (index_t e = cp[j]; e < cp[j + 1]; ++e) acc += head[perm[e]];
      od[static_cast<std::size_t>(j) * ev.heads + t] = acc;
    }
  }
  return out;
}

}  // namespace sgnn
