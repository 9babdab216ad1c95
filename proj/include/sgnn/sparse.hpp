#pragma once

// Sparse matrix formats (COO, CSR, CSC, ELLPACK, hybrid CSR-COO), format
// conversions through a canonical triplet order, and the adjacency
// preprocessing used by the GNN layers (self loops, symmetric degree
// normalization, zero-copy transpose).
//
// Canonical entry order is (row, col) lexicographic. CSC stores entries
// column-grouped as usual; its logical entry set still compares canonically.

#include <algorithm>
#include <cmath>
#include <optional>
#include <tuple>
#include <variant>
#include <vector>

#include "sgnn/common.hpp"
#include "sgnn/memtrack.hpp"

namespace sgnn {

enum class SparseFormat { coo, csr, csc, ellpack, hybrid };

inline const char* format_name(SparseFormat f) {
  switch (f) {
    case SparseFormat::coo: return "coo";
    case SparseFormat::csr: return "csr";
    case SparseFormat::csc: return "csc";
    case SparseFormat::ellpack: return "ellpack";
    case SparseFormat::hybrid: return "hybrid";
  }
  return "?";
}

template <class S>
struct Triplet {
  index_t row, col;
  S val;
  friend bool operator<(const Triplet& a, const Triplet& b) {
    return std::tie(a.row, a.col) < std::tie(b.row, b.col);
  }
};

template <class S>
struct CooMatrix {
  index_t n_rows = 0, n_cols = 0;
  Array<index_t> rows, cols;
  Array<S> vals;
  index_t nnz() const { return static_cast<index_t>(vals.size()); }
};

template <class S>
struct CsrMatrix {
  index_t n_rows = 0, n_cols = 0;
  Array<index_t> rowptr, cols;
  Array<S> vals;
  index_t nnz() const { return static_cast<index_t>(vals.size()); }
};

template <class S>
struct CscMatrix {
  index_t n_rows = 0, n_cols = 0;
  Array<index_t> colptr, rows;
  Array<S> vals;
  index_t nnz() const { return static_cast<index_t>(vals.size()); }
};

// Padding slots use column index n_cols (one past the end) and value 0.
template <class S>
struct EllpackMatrix {
  index_t n_rows = 0, n_cols = 0, width = 0;
  Array<index_t> col_idx;  // n_rows x width
  Array<S> vals;           // n_rows x width
  index_t nnz() const;
};

template <class S>
struct HybridCsrCoo {
  CsrMatrix<S> csr_part;  // at most t entries per row
  CooMatrix<S> coo_part;  // overflow
  index_t t = 0;
  index_t nnz() const { return csr_part.nnz() + coo_part.nnz(); }
};

template <class S>
using SparseMatrix =
    std::variant<CooMatrix<S>, CsrMatrix<S>, CscMatrix<S>, EllpackMatrix<S>, HybridCsrCoo<S>>;

template <class S>
index_t EllpackMatrix<S>::nnz() const {
  index_t q = 0;
  for (std::size_t i = 0; i < col_idx.size(); ++i)
    if (col_idx[i] != n_cols) ++q;
  return q;
}

struct ConvertOptions {
  // Upper bound on n_rows * width for an ELLPACK target.
  count_t ellpack_max_entries = count_t{1} << 28;
  // Hybrid CSR rows keep at most t entries; 0 means ceil(q / n_rows).
  index_t hybrid_t = 0;
};

// ---------------------------------------------------------------------------
// Builders and conversions
// ---------------------------------------------------------------------------

// Sorts to canonical order; duplicate (row, col) pairs keep the last value.
template <class S>
CooMatrix<S> coo_from_triplets(index_t n_rows, index_t n_cols, std::vector<Triplet<S>> ts) {
  for (const auto& t : ts) {
    require(t.row >= 0 && t.row < n_rows && t.col >= 0 && t.col < n_cols,
            "coo_from_triplets: index out of range");
  }
  std::stable_sort(ts.begin(), ts.end());
  std::size_t w = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (w > 0 && ts[w - 1].row == ts[i].row && ts[w - 1].col == ts[i].col) {
      ts[w - 1].val = ts[i].val;  // keep last
    } else {
      ts[w++] = ts[i];
    }
  }
  ts.resize(w);

  CooMatrix<S> m;
  m.n_rows = n_rows;
  m.n_cols = n_cols;
  m.rows = Array<index_t>::allocate(w);
  m.cols = Array<index_t>::allocate(w);
  m.vals = Array<S>::allocate(w);
  index_t* r = m.rows.mutable_data();
  index_t* c = m.cols.mutable_data();
  S* v = m.vals.mutable_data();
  for (std::size_t i = 0; i < w; ++i) {
    r[i] = ts[i].row;
    c[i] = ts[i].col;
    v[i] = ts[i].val;
  }
  return m;
}

template <class S>
std::vector<Triplet<S>> to_triplets(const CooMatrix<S>& m) {
  std::vector<Triplet<S>> ts(static_cast<std::size_t>(m.nnz()));
  for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = {m.rows[i], m.cols[i], m.vals[i]};
  return ts;
}

template <class S>
CsrMatrix<S> coo_to_csr(const CooMatrix<S>& m) {
  const std::size_t q = static_cast<std::size_t>(m.nnz());
  CsrMatrix<S> out;
  out.n_rows = m.n_rows;
  out.n_cols = m.n_cols;
  out.rowptr = Array<index_t>::zeros(static_cast<std::size_t>(m.n_rows) + 1);
  out.cols = Array<index_t>::allocate(q);
  out.vals = Array<S>::allocate(q);
  index_t* rp = out.rowptr.mutable_data();
  index_t* cc = out.cols.mutable_data();
  S* vv = out.vals.mutable_data();
  for (std::size_t e = 0; e < q; ++e) rp[m.rows[e] + 1]++;
  for (index_t i = 0; i < m.n_rows; ++i) rp[i + 1] += rp[i];
  // entries are already canonical, so a single pass preserves column order
  for (std::size_t e = 0; e < q; ++e) {
    cc[e] = m.cols[e];
    vv[e] = m.vals[e];
  }
  return out;
}

template <class S>
CooMatrix<S> csr_to_coo(const CsrMatrix<S>& m) {
  const std::size_t q = static_cast<std::size_t>(m.nnz());
  CooMatrix<S> out;
  out.n_rows = m.n_rows;
  out.n_cols = m.n_cols;
  out.rows = Array<index_t>::allocate(q);
  out.cols = Array<index_t>::allocate(q);
  out.vals = Array<S>::allocate(q);
  index_t* r = out.rows.mutable_data();
  index_t* c = out.cols.mutable_data();
  S* v = out.vals.mutable_data();
  for (index_t i = 0; i < m.n_rows; ++i)
    for (index_t e = m.rowptr[static_cast<std::size_t>(i)];
         e < m.rowptr[static_cast<std::size_t>(i) + 1]; ++e) {
      r[e] = i;
      c[e] = m.cols[static_cast<std::size_t>(e)];
      v[e] = m.vals[static_cast<std::size_t>(e)];
    }
  return out;
}

template <class S>
CscMatrix<S> coo_to_csc(const CooMatrix<S>& m) {
  const std::size_t q = static_cast<std::size_t>(m.nnz());
  CscMatrix<S> out;
  out.n_rows = m.n_rows;
  out.n_cols = m.n_cols;
  out.colptr = Array<index_t>::zeros(static_cast<std::size_t>(m.n_cols) + 1);
  out.rows = Array<index_t>::allocate(q);
  out.vals = Array<S>::allocate(q);
  index_t* cp = out.colptr.mutable_data();
  index_t* rr = out.rows.mutable_data();
  S* vv = out.vals.mutable_data();
  for (std::size_t e = 0; e < q; ++e) cp[m.cols[e] + 1]++;
  for (index_t j = 0; j < m.n_cols; ++j) cp[j + 1] += cp[j];
  std::vector<index_t> fill(static_cast<std::size_t>(m.n_cols), 0);
  // canonical (row-major) input scanned in order gives ascending rows per column
  for (std::size_t e = 0; e < q; ++e) {
    const index_t j = m.cols[e];
    const index_t at = cp[j] + fill[static_cast<std::size_t>(j)]++;
    rr[at] = m.rows[e];
    vv[at] = m.vals[e];
  }
  return out;
}

template <class S>
CooMatrix<S> csc_to_coo(const CscMatrix<S>& m) {
  std::vector<Triplet<S>> ts;
  ts.reserve(static_cast<std::size_t>(m.nnz()));
  for (index_t j = 0; j < m.n_cols; ++j)
    for (index_t e = m.colptr[static_cast<std::size_t>(j)];
         e < m.colptr[static_cast<std::size_t>(j) + 1]; ++e)
      ts.push_back({m.rows[static_cast<std::size_t>(e)], j, m.vals[static_cast<std::size_t>(e)]});
  return coo_from_triplets(m.n_rows, m.n_cols, std::move(ts));
}

template <class S>
EllpackMatrix<S> coo_to_ellpack(const CooMatrix<S>& m,
                                count_t max_entries = ConvertOptions{}.ellpack_max_entries) {
  std::vector<index_t> row_len(static_cast<std::size_t>(m.n_rows), 0);
  for (index_t e = 0; e < m.nnz(); ++e) row_len[static_cast<std::size_t>(m.rows[e])]++;
  index_t p = 0;
  for (index_t len : row_len) p = std::max(p, len);
  const count_t entries = static_cast<count_t>(m.n_rows) * p;
  if (entries > max_entries)
    fail_invalid("ellpack: n_rows*width exceeds the configured memory budget");

  EllpackMatrix<S> out;
  out.n_rows = m.n_rows;
  out.n_cols = m.n_cols;
  out.width = p;
  out.col_idx = Array<index_t>::allocate(static_cast<std::size_t>(entries));
  out.vals = Array<S>::zeros(static_cast<std::size_t>(entries));
  index_t* ci = out.col_idx.mutable_data();
  S* vv = out.vals.mutable_data();
  for (std::size_t i = 0; i < static_cast<std::size_t>(entries); ++i) ci[i] = m.n_cols;
  std::vector<index_t> fill(static_cast<std::size_t>(m.n_rows), 0);
  for (index_t e = 0; e < m.nnz(); ++e) {
    const index_t i = m.rows[static_cast<std::size_t>(e)];
    const std::size_t at =
        static_cast<std::size_t>(i) * p + fill[static_cast<std::size_t>(i)]++;
    ci[at] = m.cols[static_cast<std::size_t>(e)];
    vv[at] = m.vals[static_cast<std::size_t>(e)];
  }
  return out;
}

template <class S>
CooMatrix<S> ellpack_to_coo(const EllpackMatrix<S>& m) {
  std::vector<Triplet<S>> ts;
  for (index_t i = 0; i < m.n_rows; ++i)
    for (index_t j = 0; j < m.width; ++j) {
      const std::size_t at = static_cast<std::size_t>(i) * m.width + j;
      if (m.col_idx[at] != m.n_cols) ts.push_back({i, m.col_idx[at], m.vals[at]});
    }
  return coo_from_triplets(m.n_rows, m.n_cols, std::move(ts));
}

template <class S>
HybridCsrCoo<S> split_hybrid(const CsrMatrix<S>& m, index_t t) {
  require(t >= 1, "split_hybrid: t must be >= 1");
  std::vector<Triplet<S>> head, tail;
  for (index_t i = 0; i < m.n_rows; ++i) {
    const index_t b = m.rowptr[static_cast<std::size_t>(i)];
    const index_t e = m.rowptr[static_cast<std::size_t>(i) + 1];
    for (index_t k = b; k < e; ++k) {
      Triplet<S> tr{i, m.cols[static_cast<std::size_t>(k)], m.vals[static_cast<std::size_t>(k)]};
      if (k - b < t)
        head.push_back(tr);
      else
        tail.push_back(tr);
    }
  }
  HybridCsrCoo<S> out;
  out.t = t;
  out.csr_part = coo_to_csr(coo_from_triplets(m.n_rows, m.n_cols, std::move(head)));
  out.coo_part = coo_from_triplets(m.n_rows, m.n_cols, std::move(tail));
  return out;
}

template <class S>
index_t default_hybrid_t(const CsrMatrix<S>& m) {
  if (m.n_rows == 0) return 1;
  const double avg = static_cast<double>(m.nnz()) / m.n_rows;
  return std::max<index_t>(1, static_cast<index_t>(std::ceil(avg)));
}

template <class S>
CooMatrix<S> hybrid_to_coo(const HybridCsrCoo<S>& m) {
  auto ts = to_triplets(csr_to_coo(m.csr_part));
  auto tail = to_triplets(m.coo_part);
  ts.insert(ts.end(), tail.begin(), tail.end());
  return coo_from_triplets(m.csr_part.n_rows, m.csr_part.n_cols, std::move(ts));
}

template <class S>
CooMatrix<S> to_coo(const SparseMatrix<S>& m) {
  return std::visit(
      [](const auto& x) -> CooMatrix<S> {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, CooMatrix<S>>) return x;
        else if constexpr (std::is_same_v<T, CsrMatrix<S>>) return csr_to_coo(x);
        else if constexpr (std::is_same_v<T, CscMatrix<S>>) return csc_to_coo(x);
        else if constexpr (std::is_same_v<T, EllpackMatrix<S>>) return ellpack_to_coo(x);
        else return hybrid_to_coo(x);
      },
      m);
}

template <class S>
SparseMatrix<S> convert(const SparseMatrix<S>& m, SparseFormat target,
                        const ConvertOptions& opts = {}) {
  CooMatrix<S> coo = to_coo(m);
  switch (target) {
    case SparseFormat::coo: return coo;
    case SparseFormat::csr: return coo_to_csr(coo);
    case SparseFormat::csc: return coo_to_csc(coo);
    case SparseFormat::ellpack: return coo_to_ellpack(coo, opts.ellpack_max_entries);
    case SparseFormat::hybrid: {
      CsrMatrix<S> csr = coo_to_csr(coo);
      const index_t t = opts.hybrid_t > 0 ? opts.hybrid_t : default_hybrid_t(csr);
      return split_hybrid(csr, t);
    }
  }
  fail_invalid("convert: unknown target format");
}

template <class S>
SparseFormat format_of(const SparseMatrix<S>& m) {
  return static_cast<SparseFormat>(m.index());
}

template <class S>
index_t sparse_rows(const SparseMatrix<S>& m) {
  return std::visit(
      [](const auto& x) -> index_t {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, HybridCsrCoo<S>>) return x.csr_part.n_rows;
        else return x.n_rows;
      },
      m);
}

template <class S>
index_t sparse_cols(const SparseMatrix<S>& m) {
  return std::visit(
      [](const auto& x) -> index_t {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, HybridCsrCoo<S>>) return x.csr_part.n_cols;
        else return x.n_cols;
      },
      m);
}

template <class S>
index_t sparse_nnz(const SparseMatrix<S>& m) {
  return std::visit([](const auto& x) { return x.nnz(); }, m);
}

template <class S>
index_t max_row_nnz(const CooMatrix<S>& m) {
  std::vector<index_t> len(static_cast<std::size_t>(m.n_rows), 0);
  index_t p = 0;
  for (index_t e = 0; e < m.nnz(); ++e)
    p = std::max(p, ++len[static_cast<std::size_t>(m.rows[e])]);
  return p;
}

template <class S>
bool entries_equal(const SparseMatrix<S>& a, const SparseMatrix<S>& b) {
  CooMatrix<S> ca = to_coo(a), cb = to_coo(b);
  if (ca.n_rows != cb.n_rows || ca.n_cols != cb.n_cols || ca.nnz() != cb.nnz()) return false;
  for (index_t e = 0; e < ca.nnz(); ++e) {
    const std::size_t i = static_cast<std::size_t>(e);
    if (ca.rows[i] != cb.rows[i] || ca.cols[i] != cb.cols[i] || ca.vals[i] != cb.vals[i])
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Transpose reinterpretation: CSR arrays of A, read as CSC arrays, represent
// A^T (and vice versa). Buffers are shared, nothing is copied.
// ---------------------------------------------------------------------------

template <class S>
CscMatrix<S> transpose(const CsrMatrix<S>& m) {
  CscMatrix<S> out;
  out.n_rows = m.n_cols;
  out.n_cols = m.n_rows;
  out.colptr = m.rowptr;
  out.rows = m.cols;
  out.vals = m.vals;
  return out;
}

template <class S>
CsrMatrix<S> transpose(const CscMatrix<S>& m) {
  CsrMatrix<S> out;
  out.n_rows = m.n_cols;
  out.n_cols = m.n_rows;
  out.rowptr = m.colptr;
  out.cols = m.rows;
  out.vals = m.vals;
  return out;
}

// Materialized transpose for the formats without a zero-copy view.
template <class S>
CooMatrix<S> transpose(const CooMatrix<S>& m) {
  std::vector<Triplet<S>> ts;
  ts.reserve(static_cast<std::size_t>(m.nnz()));
  for (index_t e = 0; e < m.nnz(); ++e) {
    const std::size_t i = static_cast<std::size_t>(e);
    ts.push_back({m.cols[i], m.rows[i], m.vals[i]});
  }
  return coo_from_triplets(m.n_cols, m.n_rows, std::move(ts));
}

template <class S>
SparseMatrix<S> transpose_any(const SparseMatrix<S>& m) {
  return std::visit(
      [](const auto& x) -> SparseMatrix<S> {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, CsrMatrix<S>>) return transpose(x);
        else if constexpr (std::is_same_v<T, CscMatrix<S>>) return transpose(x);
        else if constexpr (std::is_same_v<T, CooMatrix<S>>) return transpose(x);
        else if constexpr (std::is_same_v<T, EllpackMatrix<S>>)
          return coo_to_ellpack(transpose(ellpack_to_coo(x)));
        else {
          const HybridCsrCoo<S>& h = x;
          CsrMatrix<S> full = coo_to_csr(transpose(hybrid_to_coo(h)));
          return split_hybrid(full, h.t);
        }
      },
      m);
}

// ---------------------------------------------------------------------------
// GCN adjacency preprocessing
// ---------------------------------------------------------------------------

// Ensures every diagonal entry exists (value 1 where absent). Square only.
template <class S>
SparseMatrix<S> add_self_loops(const SparseMatrix<S>& m) {
  require(sparse_rows(m) == sparse_cols(m), "add_self_loops: matrix must be square");
  const SparseFormat fmt = format_of(m);
  CooMatrix<S> coo = to_coo(m);
  std::vector<bool> has_diag(static_cast<std::size_t>(coo.n_rows), false);
  for (index_t e = 0; e < coo.nnz(); ++e)
    if (coo.rows[static_cast<std::size_t>(e)] == coo.cols[static_cast<std::size_t>(e)])
      has_diag[static_cast<std::size_t>(coo.rows[static_cast<std::size_t>(e)])] = true;
  auto ts = to_triplets(coo);
  for (index_t i = 0; i < coo.n_rows; ++i)
    if (!has_diag[static_cast<std::size_t>(i)]) ts.push_back({i, i, S(1)});
  SparseMatrix<S> out = coo_from_triplets(coo.n_rows, coo.n_cols, std::move(ts));
  return fmt == SparseFormat::coo ? out : convert(out, fmt);
}

// A' = D^{-1/2} (A + I) D^{-1/2} with D the row-sum degree matrix of A + I.
// Self loops keep every degree >= 1.
template <class S>
SparseMatrix<S> gcn_normalize(const SparseMatrix<S>& m) {
  const SparseFormat fmt = format_of(m);
  CooMatrix<S> coo = to_coo(add_self_loops(m));
  std::vector<double> deg(static_cast<std::size_t>(coo.n_rows), 0.0);
  for (index_t e = 0; e < coo.nnz(); ++e) {
    const std::size_t i = static_cast<std::size_t>(e);
    require(coo.vals[i] >= S(0), "gcn_normalize: negative edge weight");
    deg[static_cast<std::size_t>(coo.rows[i])] += static_cast<double>(coo.vals[i]);
  }
  S* v = coo.vals.mutable_data();
  for (index_t e = 0; e < coo.nnz(); ++e) {
    const std::size_t i = static_cast<std::size_t>(e);
    const double di = deg[static_cast<std::size_t>(coo.rows[i])];
    const double dj = deg[static_cast<std::size_t>(coo.cols[i])];
    v[i] = static_cast<S>(static_cast<double>(v[i]) / std::sqrt(di * dj));
  }
  SparseMatrix<S> out = coo;
  return fmt == SparseFormat::coo ? out : convert(out, fmt);
}

// ---------------------------------------------------------------------------
// Invariant checks (used by tests and the loaders)
// ---------------------------------------------------------------------------

template <class S>
void validate(const CsrMatrix<S>& m) {
  require(m.rowptr.size() == static_cast<std::size_t>(m.n_rows) + 1, "csr: bad rowptr length");
  require(m.rowptr[0] == 0, "csr: rowptr[0] != 0");
  require(m.rowptr[static_cast<std::size_t>(m.n_rows)] == m.nnz(), "csr: rowptr[n] != nnz");
  for (index_t i = 0; i < m.n_rows; ++i) {
    const index_t b = m.rowptr[static_cast<std::size_t>(i)];
    const index_t e = m.rowptr[static_cast<std::size_t>(i) + 1];
    require(b <= e, "csr: rowptr not monotone");
    for (index_t k = b; k < e; ++k) {
      require(m.cols[static_cast<std::size_t>(k)] >= 0 &&
                  m.cols[static_cast<std::size_t>(k)] < m.n_cols,
              "csr: column out of range");
      if (k > b)
        require(m.cols[static_cast<std::size_t>(k)] > m.cols[static_cast<std::size_t>(k) - 1],
                "csr: columns not strictly increasing in row");
    }
  }
}

template <class S>
void validate(const CscMatrix<S>& m) {
  validate(transpose(m));
}

template <class S>
void validate(const EllpackMatrix<S>& m) {
  require(m.col_idx.size() == static_cast<std::size_t>(m.n_rows) * m.width,
          "ellpack: bad index matrix size");
  for (std::size_t i = 0; i < m.col_idx.size(); ++i) {
    if (m.col_idx[i] == m.n_cols)
      require(m.vals[i] == S(0), "ellpack: padding value must be 0");
    else
      require(m.col_idx[i] >= 0 && m.col_idx[i] < m.n_cols, "ellpack: column out of range");
  }
}

template <class S>
void validate(const HybridCsrCoo<S>& m) {
  validate(m.csr_part);
  for (index_t i = 0; i < m.csr_part.n_rows; ++i)
    require(m.csr_part.rowptr[static_cast<std::size_t>(i) + 1] -
                    m.csr_part.rowptr[static_cast<std::size_t>(i)] <=
                m.t,
            "hybrid: csr part exceeds t entries in a row");
}

}  // namespace sgnn
