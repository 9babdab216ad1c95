#pragma once

// Shared sparsity structure for attention-style edge data. A SparsePattern
// fixes one n x n structure in canonical (row, col) order and precomputes the
// column-grouped traversal (with a permutation back into canonical entry
// positions) so transposed products and column reductions stay deterministic
// and allocation free. All heads of an EdgeValues share one pattern.

#include <memory>
#include <vector>

#include "sgnn/dense.hpp"
#include "sgnn/sparse.hpp"

namespace sgnn {

class SparsePattern {
 public:
  static std::shared_ptr<const SparsePattern> build(index_t n, const index_t* rowptr,
                                                    const index_t* cols) {
    auto p = std::make_shared<SparsePattern>();
    p->n_ = n;
    p->q_ = rowptr[n];
    const std::size_t q = static_cast<std::size_t>(p->q_);
    p->rowptr_ = Array<index_t>::from_range(rowptr, rowptr + n + 1);
    p->cols_ = Array<index_t>::from_range(cols, cols + q);

    // column-grouped view: colptr / rows / permutation into canonical order
    p->colptr_ = Array<index_t>::zeros(static_cast<std::size_t>(n) + 1);
    p->rows_ = Array<index_t>::allocate(q);
    p->perm_ = Array<index_t>::allocate(q);
    index_t* cp = p->colptr_.mutable_data();
    index_t* rr = p->rows_.mutable_data();
    index_t* pm = p->perm_.mutable_data();
    for (std::size_t e = 0; e < q; ++e) cp[cols[e] + 1]++;
    for (index_t j = 0; j < n; ++j) cp[j + 1] += cp[j];
    std::vector<index_t> fill(static_cast<std::size_t>(n), 0);
    for (index_t i = 0; i < n; ++i)
      for (index_t e = rowptr[i]; e < rowptr[i + 1]; ++e) {
        const index_t j = cols[static_cast<std::size_t>(e)];
        const index_t at = cp[j] + fill[static_cast<std::size_t>(j)]++;
        rr[at] = i;
        pm[at] = e;
      }

    p->diag_ = Array<index_t>::allocate(static_cast<std::size_t>(n));
    index_t* dg = p->diag_.mutable_data();
    p->all_self_loops_ = true;
    for (index_t i = 0; i < n; ++i) {
      dg[i] = -1;
      for (index_t e = rowptr[i]; e < rowptr[i + 1]; ++e)
        if (cols[static_cast<std::size_t>(e)] == i) {
          dg[i] = e;
          break;
        }
      if (dg[i] < 0) p->all_self_loops_ = false;
    }
    return p;
  }

  template <class S>
  static std::shared_ptr<const SparsePattern> from_csr(const CsrMatrix<S>& m) {
    require(m.n_rows == m.n_cols, "SparsePattern: structure must be square");
    return build(m.n_rows, m.rowptr.data(), m.cols.data());
  }

  index_t n() const { return n_; }
  index_t nnz() const { return q_; }
  const index_t* rowptr() const { return rowptr_.data(); }
  const index_t* cols() const { return cols_.data(); }
  const index_t* colptr() const { return colptr_.data(); }
  const index_t* rows() const { return rows_.data(); }
  // canonical entry index of the e-th entry in column-grouped order
  const index_t* perm() const { return perm_.data(); }
  index_t diag_index(index_t i) const { return diag_[static_cast<std::size_t>(i)]; }
  bool has_all_self_loops() const { return all_self_loops_; }

  index_t row_of(index_t e) const {
    // binary search over rowptr; used only by small tests
    index_t lo = 0, hi = n_;
    while (lo + 1 < hi) {
      const index_t mid = (lo + hi) / 2;
      if (rowptr_[static_cast<std::size_t>(mid)] <= e) lo = mid;
      else hi = mid;
    }
    return lo;
  }

 private:
  index_t n_ = 0, q_ = 0;
  Array<index_t> rowptr_, cols_;
  Array<index_t> colptr_, rows_, perm_;
  Array<index_t> diag_;
  bool all_self_loops_ = false;
};

using PatternPtr = std::shared_ptr<const SparsePattern>;

// Per-edge values for h heads over a shared pattern, stored head-major
// (h x q): one head's edge values are contiguous.
template <class S>
struct EdgeValues {
  PatternPtr pattern;
  index_t heads = 0;
  DenseMatrix<S> vals;  // heads x q

  static EdgeValues zeros(PatternPtr p, index_t h) {
    EdgeValues ev;
    ev.pattern = std::move(p);
    ev.heads = h;
    ev.vals = DenseMatrix<S>::zeros(h, ev.pattern->nnz());
    return ev;
  }
  static EdgeValues uninitialized(PatternPtr p, index_t h) {
    EdgeValues ev;
    ev.pattern = std::move(p);
    ev.heads = h;
    ev.vals = DenseMatrix<S>(h, ev.pattern->nnz());
    return ev;
  }
  index_t nnz() const { return pattern ? pattern->nnz() : 0; }
  S at(index_t head, index_t e) const { return vals(head, e); }
};

// 1 byte per edge per head, true where the pre-activation was > 0.
struct EdgeMask {
  PatternPtr pattern;
  index_t heads = 0;
  Array<std::uint8_t> bits;  // heads x q

  static EdgeMask allocate(PatternPtr p, index_t h) {
    EdgeMask m;
    m.pattern = std::move(p);
    m.heads = h;
    m.bits = Array<std::uint8_t>::allocate(static_cast<std::size_t>(h) * m.pattern->nnz());
    return m;
  }
  bool at(index_t head, index_t e) const {
    return bits[static_cast<std::size_t>(head) * pattern->nnz() + e] != 0;
  }
};

// Per-node attention scores, n x h each.
template <class S>
struct NodeScores {
  DenseMatrix<S> src;
  DenseMatrix<S> dst;
};

}  // namespace sgnn
