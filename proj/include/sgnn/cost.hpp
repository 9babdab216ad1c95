#pragma once

// Analytic FLOP / I-O model for the sparse kernels and the GCN/GAT layer
// schemes, plus the scheme selector driven by it.
//
// SpMM convention (reproduces the reference operational intensities exactly
// with 4-byte scalars and indices): index and value arrays are read once, the
// dense operand B (n x f) is read once, the output C is read and written
// (accumulation), so dense traffic is 3*sb*n*f. FLOPs are 2qf, counting only
// real entries for ELLPACK.
//
// SDDMM convention (documented here; the reference table for SDDMM cannot be
// reproduced exactly from published information): structure and input values
// are read once, output values are written once, and the column-side dense
// operand costs one f-length fetch per nonzero (4*q*f) while the row-side
// operand is assumed to stream with the row iteration. FLOPs are q(2f+1):
// a 2f dot product plus one scaling multiply per entry. ELLPACK reads its
// padded index matrix but skips padded values after the sentinel check.

#include <algorithm>
#include <string>

#include "sgnn/common.hpp"
#include "sgnn/sparse.hpp"

namespace sgnn {

struct CostEstimate {
  count_t flops = 0;
  count_t bytes = 0;
  double operational_intensity = 0.0;

  static CostEstimate of(count_t flops, count_t bytes) {
    CostEstimate c;
    c.flops = flops;
    c.bytes = bytes;
    c.operational_intensity = bytes > 0 ? static_cast<double>(flops) / static_cast<double>(bytes) : 0.0;
    return c;
  }
};

namespace detail {

inline count_t spmm_sparse_bytes(SparseFormat fmt, count_t n, count_t q, count_t p,
                                 count_t sb, count_t ib) {
  switch (fmt) {
    case SparseFormat::csr:
    case SparseFormat::csc:
      return ib * (q + n + 1) + sb * q;
    case SparseFormat::coo:
      return ib * 2 * q + sb * q;
    case SparseFormat::ellpack:
      require(p > 0, "cost: ELLPACK width p is required");
      return (ib + sb) * n * p;
    case SparseFormat::hybrid:
      fail_invalid("cost: hybrid needs the per-part split, use the *_hybrid overload");
  }
  return 0;
}

}  // namespace detail

inline CostEstimate spmm_cost(SparseFormat fmt, count_t n, count_t q, count_t p, count_t f,
                              count_t scalar_bytes = 4, count_t index_bytes = 4) {
  const count_t flops = 2 * q * f;
  const count_t bytes =
      detail::spmm_sparse_bytes(fmt, n, q, p, scalar_bytes, index_bytes) + 3 * scalar_bytes * n * f;
  return CostEstimate::of(flops, bytes);
}

inline CostEstimate spmm_cost_hybrid(count_t n, count_t q_csr, count_t q_coo, count_t f,
                                     count_t scalar_bytes = 4, count_t index_bytes = 4) {
  const count_t q = q_csr + q_coo;
  const count_t bytes =
      detail::spmm_sparse_bytes(SparseFormat::csr, n, q_csr, 0, scalar_bytes, index_bytes) +
      detail::spmm_sparse_bytes(SparseFormat::coo, n, q_coo, 0, scalar_bytes, index_bytes) +
      3 * scalar_bytes * n * f;
  return CostEstimate::of(2 * q * f, bytes);
}

inline CostEstimate sddmm_cost(SparseFormat fmt, count_t n, count_t q, count_t p, count_t f,
                               count_t scalar_bytes = 4, count_t index_bytes = 4) {
  const count_t flops = q * (2 * f + 1);
  count_t bytes = scalar_bytes * q * f;  // per-edge dense fetch
  switch (fmt) {
    case SparseFormat::csr:
    case SparseFormat::csc:
      bytes += index_bytes * (q + n + 1) + 2 * scalar_bytes * q;
      break;
    case SparseFormat::coo:
      bytes += index_bytes * 2 * q + 2 * scalar_bytes * q;
      break;
    case SparseFormat::ellpack:
      require(p > 0, "cost: ELLPACK width p is required");
      bytes += index_bytes * n * p + 2 * scalar_bytes * q;
      break;
    case SparseFormat::hybrid:
      fail_invalid("cost: hybrid needs the per-part split, use the *_hybrid overload");
  }
  return CostEstimate::of(flops, bytes);
}

inline CostEstimate sddmm_cost_hybrid(count_t n, count_t q_csr, count_t q_coo, count_t f,
                                      count_t scalar_bytes = 4, count_t index_bytes = 4) {
  const count_t q = q_csr + q_coo;
  const count_t bytes = index_bytes * (q_csr + n + 1) + index_bytes * 2 * q_coo +
                        2 * scalar_bytes * q + scalar_bytes * q * f;
  return CostEstimate::of(q * (2 * f + 1), bytes);
}

// ---------------------------------------------------------------------------
// GCN computation schemes
// ---------------------------------------------------------------------------

enum class GcnForward { transform_first, propagate_first, propagate_first_cached };
enum class GcnBackward { fused_propagate, split_propagate, split_propagate_cached };

struct SchemeChoice {
  GcnForward forward = GcnForward::transform_first;
  GcnBackward backward = GcnBackward::fused_propagate;
  bool caching = false;
};

inline const char* to_string(GcnForward f) {
  switch (f) {
    case GcnForward::transform_first: return "transform_first";
    case GcnForward::propagate_first: return "propagate_first";
    case GcnForward::propagate_first_cached: return "propagate_first_cached";
  }
  return "?";
}

inline const char* to_string(GcnBackward b) {
  switch (b) {
    case GcnBackward::fused_propagate: return "fused_propagate";
    case GcnBackward::split_propagate: return "split_propagate";
    case GcnBackward::split_propagate_cached: return "split_propagate_cached";
  }
  return "?";
}

// Per-pass FLOPs. A' is n x n with q entries, X is n x m, Theta is m x k.
inline count_t gcn_forward_flops(GcnForward s, count_t n, count_t m, count_t k, count_t q) {
  switch (s) {
    case GcnForward::transform_first:
      return 2 * (n * m * k + q * k);  // GEMM n x m * m x k, then SpMM on n x k
    case GcnForward::propagate_first:
    case GcnForward::propagate_first_cached:
      return 2 * (n * m * k + q * m);  // SpMM on n x m, then GEMM
  }
  return 0;
}

inline count_t gcn_backward_flops(GcnBackward s, count_t n, count_t m, count_t k, count_t q,
                                  bool needs_feature_grad) {
  switch (s) {
    case GcnBackward::fused_propagate:
      // S = A'^T dX' (one n x k SpMM), dTheta = X^T S, optionally dX = S Theta^T
      return 2 * q * k + 2 * n * m * k + (needs_feature_grad ? 2 * n * m * k : 0);
    case GcnBackward::split_propagate:
      // recompute P = A'X, dTheta = P^T dX'; optionally dX = A'^T (dX' Theta^T)
      return 2 * q * m + 2 * n * m * k +
             (needs_feature_grad ? 2 * n * m * k + 2 * q * m : 0);
    case GcnBackward::split_propagate_cached:
      // P comes from the cache
      return 2 * n * m * k + (needs_feature_grad ? 2 * n * m * k + 2 * q * m : 0);
  }
  return 0;
}

inline count_t gcn_scheme_flops(const SchemeChoice& s, count_t n, count_t m, count_t k, count_t q,
                                bool needs_feature_grad) {
  return gcn_forward_flops(s.forward, n, m, k, q) +
         gcn_backward_flops(s.backward, n, m, k, q, needs_feature_grad);
}

// Transient scalar counts per pass (intermediate arrays, outputs excluded).
inline count_t gcn_forward_transients(GcnForward s, count_t n, count_t m, count_t k) {
  switch (s) {
    case GcnForward::transform_first: return n * k;  // M = X Theta
    case GcnForward::propagate_first:
    case GcnForward::propagate_first_cached: return n * m;  // P = A' X
  }
  return 0;
}

inline count_t gcn_backward_transients(GcnBackward s, count_t n, count_t m, count_t k,
                                       bool needs_feature_grad) {
  switch (s) {
    case GcnBackward::fused_propagate: return n * k;  // S = A'^T dX'
    case GcnBackward::split_propagate:
      return needs_feature_grad ? 2 * n * m : n * m;  // recomputed P (+ dX' Theta^T)
    case GcnBackward::split_propagate_cached:
      return needs_feature_grad ? n * m : 0;  // dX' Theta^T only
  }
  return 0;
}

// Scheme selection. Ties (k == m, k == 2m, 2k == m) take the propagate/split
// branch, matching the ">=" side of the usage conditions.
inline SchemeChoice gcn_select_scheme(count_t m, count_t k, bool needs_feature_grad,
                                      bool caching) {
  require(m >= 1 && k >= 1, "gcn_select_scheme: m and k must be >= 1");
  SchemeChoice c;
  if (!caching) {
    c.forward = k < m ? GcnForward::transform_first : GcnForward::propagate_first;
    const bool fused = needs_feature_grad ? (k < 2 * m) : (k < m);
    c.backward = fused ? GcnBackward::fused_propagate : GcnBackward::split_propagate;
    c.caching = false;
  } else {
    const bool transform = needs_feature_grad ? (k < m) : (2 * k < m);
    if (transform) {
      c.forward = GcnForward::transform_first;
      c.backward = GcnBackward::fused_propagate;
      c.caching = false;  // nothing worth caching on this branch
    } else {
      c.forward = GcnForward::propagate_first_cached;
      c.backward = GcnBackward::split_propagate_cached;
      c.caching = true;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// GAT caching levels
// ---------------------------------------------------------------------------

enum class GatCacheLevel { none = 0, features = 1, node_attention = 2, full = 3 };

inline const char* to_string(GatCacheLevel l) {
  switch (l) {
    case GatCacheLevel::none: return "none";
    case GatCacheLevel::features: return "features";
    case GatCacheLevel::node_attention: return "node-attn";
    case GatCacheLevel::full: return "full";
  }
  return "?";
}

// Extra bytes retained for the backward pass beyond the layer input.
// Masks are 1 byte per edge per head regardless of the scalar width.
inline count_t gat_cache_footprint(GatCacheLevel level, count_t n, count_t h, count_t k,
                                   count_t q, count_t scalar_bytes = 4) {
  switch (level) {
    case GatCacheLevel::none: return 0;
    case GatCacheLevel::features: return scalar_bytes * n * h * k;
    case GatCacheLevel::node_attention: return scalar_bytes * n * h * (k + 2);
    case GatCacheLevel::full: return scalar_bytes * n * h * k + (scalar_bytes + 1) * q * h;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Benchmark dataset statistics (graph-level counts used by the cost CLI)
// ---------------------------------------------------------------------------

struct DatasetStats {
  const char* name;
  count_t nodes;
  count_t edges;
  count_t features;
  count_t classes;
  double avg_degree;
  count_t max_degree;  // 0 where not on record
};

inline const DatasetStats* known_datasets(std::size_t* count) {
  static const DatasetStats table[] = {
      {"cora", 2708, 10556, 1433, 7, 7.8, 168},
      {"citeseer", 3327, 9104, 3703, 6, 5.47, 0},
      {"pubmed", 19717, 88648, 500, 3, 8.99, 0},
      {"flickr", 89250, 899756, 500, 7, 5.47, 0},
      {"ogb-arxiv", 169343, 1166243, 128, 40, 13.77, 436},
  };
  *count = sizeof(table) / sizeof(table[0]);
  return table;
}

inline const DatasetStats* find_dataset(const std::string& name) {
  std::size_t count = 0;
  const DatasetStats* table = known_datasets(&count);
  for (std::size_t i = 0; i < count; ++i)
    if (name == table[i].name) return &table[i];
  return nullptr;
}

}  // namespace sgnn
