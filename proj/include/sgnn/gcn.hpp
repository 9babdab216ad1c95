#pragma once

// GCN layer: X' = A' X Theta + 1 b^T over a normalized adjacency, with the
// four forward/backward scheme combinations and the cached variant.
//
// transform-first computes A'(X Theta); propagate-first computes (A'X) Theta
// and can retain P = A'X for the backward pass. The fused backward shares one
// n x k SpMM (S = A'^T dX'); the split backward uses n x m SpMMs and reuses P
// when cached. dTheta is computed as (A'X)^T dX' = X^T A'^T dX' via the
// transpose identity, so no symmetry of A' is assumed.
//
// Memory classes: intermediates are allocated as transients, the retained
// P is reclassified into the cache, outputs and gradients are outputs. The
// uncached schemes retain the layer input instead (same n x m footprint).

#include <optional>

#include "sgnn/cost.hpp"
#include "sgnn/kernels.hpp"

namespace sgnn {

enum class SchemePolicy { adaptive, force_transform_first, force_propagate_first };

inline const char* to_string(SchemePolicy p) {
  switch (p) {
    case SchemePolicy::adaptive: return "adaptive";
    case SchemePolicy::force_transform_first: return "transform-first";
    case SchemePolicy::force_propagate_first: return "propagate-first";
  }
  return "?";
}

inline SchemeChoice resolve_scheme(SchemePolicy policy, count_t m, count_t k,
                                   bool needs_feature_grad, bool caching) {
  switch (policy) {
    case SchemePolicy::adaptive:
      return gcn_select_scheme(m, k, needs_feature_grad, caching);
    case SchemePolicy::force_transform_first:
      return {GcnForward::transform_first, GcnBackward::fused_propagate, false};
    case SchemePolicy::force_propagate_first:
      if (caching)
        return {GcnForward::propagate_first_cached, GcnBackward::split_propagate_cached, true};
      return {GcnForward::propagate_first, GcnBackward::split_propagate, false};
  }
  return {};
}

template <class S>
struct GcnParams {
  DenseMatrix<S> theta;  // m x k
  std::vector<S> bias;   // k

  static GcnParams init(index_t in_features, index_t out_features, std::uint64_t seed) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
    GcnParams p;
    p.theta = DenseMatrix<S>::random_uniform(in_features, out_features, seed, -bound, bound);
    Rng rng(seed + 1);
    p.bias.resize(static_cast<std::size_t>(out_features));
    for (S& b : p.bias) b = static_cast<S>(rng.next_double(-bound, bound));
    return p;
  }
};

// Exactly one of saved_input / saved_propagated is retained.
template <class S>
struct GcnCache {
  SchemeChoice scheme;
  DenseMatrix<S> saved_input;       // X, for the uncached backward schemes
  DenseMatrix<S> saved_propagated;  // P = A'X, for the cached scheme
  bool consumed = false;

  count_t retained_bytes() const {
    return static_cast<count_t>(saved_input.bytes() + saved_propagated.bytes());
  }
};

template <class S>
struct GcnGradients {
  DenseMatrix<S> d_theta;
  std::vector<S> d_bias;
  std::optional<DenseMatrix<S>> d_input;
};

template <class S>
struct GcnForwardResult {
  DenseMatrix<S> output;
  GcnCache<S> cache;
};

template <class S>
GcnForwardResult<S> gcn_forward(const DenseMatrix<S>& X, const AdjacencyOp<S>& A,
                                const GcnParams<S>& params, const SchemeChoice& scheme) {
  require(A.n_rows() == A.n_cols() && A.n_cols() == X.rows(), "gcn_forward: adjacency/input shape mismatch");
  require(X.cols() == params.theta.rows(), "gcn_forward: input width does not match theta");

  GcnForwardResult<S> r;
  r.cache.scheme = scheme;

  if (scheme.forward == GcnForward::transform_first) {
    DenseMatrix<S> M;
    {
      ScopedMemClass t(MemClass::transient);
      M = gemm(X, params.theta);
    }
    {
      ScopedMemClass o(MemClass::output);
      r.output = A.multiply(M);
    }
    bias_add_rows_inplace(r.output, params.bias);
    r.cache.saved_input = X;
  } else {
    DenseMatrix<S> P;
    {
      ScopedMemClass t(MemClass::transient);
      P = A.multiply(X);
    }
    {
      ScopedMemClass o(MemClass::output);
      r.output = gemm(P, params.theta);
    }
    bias_add_rows_inplace(r.output, params.bias);
    if (scheme.forward == GcnForward::propagate_first_cached) {
      P.reclassify(MemClass::cache);
      r.cache.saved_propagated = P;
    } else {
      r.cache.saved_input = X;
    }
  }
  return r;
}

template <class S>
GcnGradients<S> gcn_backward(const DenseMatrix<S>& d_output, const AdjacencyOp<S>& A,
                             const GcnParams<S>& params, GcnCache<S>& cache,
                             bool needs_feature_grad) {
  require(!cache.consumed, "gcn_backward: cache already consumed");
  cache.consumed = true;
  require(d_output.cols() == params.theta.cols() && d_output.rows() == A.n_rows(),
          "gcn_backward: gradient shape mismatch");

  const bool cached = cache.scheme.backward == GcnBackward::split_propagate_cached;
  if (cached)
    require(!cache.saved_propagated.empty(), "gcn_backward: cached scheme without saved A'X");
  else
    require(!cache.saved_input.empty(), "gcn_backward: missing saved input");

  GcnGradients<S> g;
  g.d_bias = column_sums(d_output);

  switch (cache.scheme.backward) {
    case GcnBackward::fused_propagate: {
      DenseMatrix<S> Smat;
      {
        ScopedMemClass t(MemClass::transient);
        Smat = A.multiply_transposed(d_output);
      }
      ScopedMemClass o(MemClass::output);
      g.d_theta = gemm(cache.saved_input, Smat, true, false);
      if (needs_feature_grad) g.d_input = gemm(Smat, params.theta, false, true);
      break;
    }
    case GcnBackward::split_propagate: {
      DenseMatrix<S> P, G;
      {
        ScopedMemClass t(MemClass::transient);
        P = A.multiply(cache.saved_input);
        if (needs_feature_grad) G = gemm(d_output, params.theta, false, true);
      }
      ScopedMemClass o(MemClass::output);
      g.d_theta = gemm(P, d_output, true, false);
      if (needs_feature_grad) g.d_input = A.multiply_transposed(G);
      break;
    }
    case GcnBackward::split_propagate_cached: {
      {
        ScopedMemClass o(MemClass::output);
        g.d_theta = gemm(cache.saved_propagated, d_output, true, false);
      }
      if (needs_feature_grad) {
        DenseMatrix<S> G;
        {
          ScopedMemClass t(MemClass::transient);
          G = gemm(d_output, params.theta, false, true);
        }
        ScopedMemClass o(MemClass::output);
        g.d_input = A.multiply_transposed(G);
      }
      break;
    }
  }
  return g;
}

}  // namespace sgnn
