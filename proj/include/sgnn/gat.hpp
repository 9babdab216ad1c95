#pragma once

// Multi-head GAT layer. Attention scores use the split-weight reordering:
// per head, M = X Theta_t, s_i = a_src . m_i, d_j = a_dst . m_j, and each
// edge only needs y_ij = s_i + d_j instead of the O(qk) per-edge product.
// The softmax normalizes over {(i, u): u in N(i) + {i}}, so the pattern must
// contain every self loop.
//
// Caching levels trade backward recomputation for retained memory:
//   none           -> recompute M, scores, mask, alpha from the saved input
//   features       -> keep M (n*h*k scalars)
//   node_attention -> keep M and the two n*h score vectors
//   full           -> keep M, alpha and the 1-byte-per-edge-per-head mask
// The layer input is always retained (dTheta = X^T dM needs it), matching
// the no-caching baseline, so only the bundle's own buffers count as extra.
//
// Dense head-batched operands use the n x h x k layout (head in the middle,
// stored as an n x (h*k) slab); edge values are head-major h x q.

#include <optional>

#include "sgnn/cost.hpp"
#include "sgnn/kernels.hpp"

namespace sgnn {

template <class S>
struct GatParams {
  index_t heads = 1;
  index_t out_features = 0;  // k, per head
  DenseMatrix<S> theta;      // m x (h*k), per-head column blocks
  DenseMatrix<S> a_src;      // h x k
  DenseMatrix<S> a_dst;      // h x k
  std::vector<S> bias;       // h*k

  static GatParams init(index_t in_features, index_t heads, index_t out_features,
                        std::uint64_t seed) {
    require(heads >= 1, "GatParams: heads must be >= 1");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
    GatParams p;
    p.heads = heads;
    p.out_features = out_features;
    p.theta =
        DenseMatrix<S>::random_uniform(in_features, heads * out_features, seed, -bound, bound);
    const double abound = 1.0 / std::sqrt(static_cast<double>(out_features));
    p.a_src = DenseMatrix<S>::random_uniform(heads, out_features, seed + 1, -abound, abound);
    p.a_dst = DenseMatrix<S>::random_uniform(heads, out_features, seed + 2, -abound, abound);
    Rng rng(seed + 3);
    p.bias.resize(static_cast<std::size_t>(heads) * out_features);
    for (S& b : p.bias) b = static_cast<S>(rng.next_double(-bound, bound));
    return p;
  }
};

template <class S>
struct GatCache {
  GatCacheLevel level = GatCacheLevel::none;
  DenseMatrix<S> saved_input;  // always retained
  DenseMatrix<S> M;            // level >= features
  NodeScores<S> scores;        // level == node_attention
  EdgeValues<S> alpha;         // level == full
  EdgeMask mask;               // level == full
  bool consumed = false;

  // Bytes owned by the bundle beyond the retained input.
  count_t extra_bytes() const {
    count_t b = static_cast<count_t>(M.bytes());
    b += static_cast<count_t>(scores.src.bytes() + scores.dst.bytes());
    b += static_cast<count_t>(alpha.vals.bytes() + mask.bits.bytes());
    return b;
  }
};

template <class S>
struct GatGradients {
  DenseMatrix<S> d_theta;  // m x (h*k)
  DenseMatrix<S> d_a_src;  // h x k
  DenseMatrix<S> d_a_dst;  // h x k
  std::vector<S> d_bias;   // h*k
  std::optional<DenseMatrix<S>> d_input;
};

template <class S>
struct GatForwardResult {
  DenseMatrix<S> output;  // n x (h*k), heads concatenated
  GatCache<S> cache;
};

template <class S>
GatForwardResult<S> gat_forward(const DenseMatrix<S>& X, const PatternPtr& pattern,
                                const GatParams<S>& params, double beta,
                                GatCacheLevel level) {
  const index_t h = params.heads, k = params.out_features;
  require(pattern && pattern->has_all_self_loops(),
          "gat_forward: pattern must contain all self loops");
  require(pattern->n() == X.rows(), "gat_forward: node count mismatch");
  require(X.cols() == params.theta.rows(), "gat_forward: input width does not match theta");
  require(beta > 0, "gat_forward: beta must be positive");

  GatForwardResult<S> r;
  r.cache.level = level;
  r.cache.saved_input = X;

  DenseMatrix<S> M;
  NodeScores<S> scores;
  EdgeValues<S> alpha;
  EdgeMask mask;
  {
    ScopedMemClass t(MemClass::transient);
    M = gemm(X, params.theta);  // n x (h*k) slab == n x h x k tensor
    scores = node_scores(M, params.a_src, params.a_dst, h, k);
    EdgeValues<S> y = edge_scores(pattern, scores);
    EdgeActivation<S> act = leaky_relu_edges(y, beta);
    alpha = edge_softmax(act.out);
    mask = act.mask;
  }
  {
    ScopedMemClass o(MemClass::output);
    r.output = spmm_semibatched(alpha, M, k);
  }
  bias_add_rows_inplace(r.output, params.bias);

  if (level >= GatCacheLevel::features) {
    M.reclassify(MemClass::cache);
    r.cache.M = M;
  }
  if (level == GatCacheLevel::node_attention) {
    scores.src.reclassify(MemClass::cache);
    scores.dst.reclassify(MemClass::cache);
    r.cache.scores = scores;
  }
  if (level == GatCacheLevel::full) {
    alpha.vals.reclassify(MemClass::cache);
    mask.bits.reclassify(MemClass::cache);
    r.cache.alpha = alpha;
    r.cache.mask = mask;
  }
  return r;
}

// Everything the backward pass needs; cached pieces are shared, missing ones
// recomputed with the same kernels and order as the forward pass.
template <class S>
struct GatIntermediates {
  DenseMatrix<S> M;
  EdgeValues<S> alpha;
  EdgeMask mask;
};

template <class S>
GatIntermediates<S> gat_recompute(const PatternPtr& pattern, const GatParams<S>& params,
                                  const GatCache<S>& cache, double beta) {
  const index_t h = params.heads, k = params.out_features;
  GatIntermediates<S> r;

  r.M = cache.level >= GatCacheLevel::features ? cache.M : gemm(cache.saved_input, params.theta);
  if (cache.level == GatCacheLevel::full) {
    r.alpha = cache.alpha;
    r.mask = cache.mask;
    return r;
  }
  NodeScores<S> scores = cache.level == GatCacheLevel::node_attention
                             ? cache.scores
                             : node_scores(r.M, params.a_src, params.a_dst, h, k);
  EdgeValues<S> y = edge_scores(pattern, scores);
  EdgeActivation<S> act = leaky_relu_edges(y, beta);
  r.alpha = edge_softmax(act.out);
  r.mask = act.mask;
  return r;
}

template <class S>
GatGradients<S> gat_backward(const DenseMatrix<S>& d_output, const PatternPtr& pattern,
                             const GatParams<S>& params, GatCache<S>& cache, double beta,
                             bool needs_feature_grad) {
  const index_t h = params.heads, k = params.out_features;
  require(!cache.consumed, "gat_backward: cache already consumed");
  cache.consumed = true;
  require(d_output.rows() == pattern->n() && d_output.cols() == h * k,
          "gat_backward: gradient shape mismatch");
  require(!cache.saved_input.empty(), "gat_backward: missing saved input");
  if (cache.level >= GatCacheLevel::features)
    require(!cache.M.empty(), "gat_backward: cache level promises M but it is absent");
  if (cache.level == GatCacheLevel::full)
    require(cache.alpha.heads == h && cache.mask.heads == h,
            "gat_backward: cache level promises alpha/mask but they are absent");

  GatGradients<S> g;
  g.d_bias = column_sums(d_output);

  GatIntermediates<S> im;
  DenseMatrix<S> dM, dS, dD;
  {
    ScopedMemClass t(MemClass::transient);
    im = gat_recompute(pattern, params, cache, beta);

    // dAlpha = dX' M^T sampled on the pattern, then back through softmax
    // and the leaky relu mask
    EdgeValues<S> d_alpha = sddmm_semibatched(pattern, d_output, im.M, h, k);
    EdgeValues<S> d_w = edge_softmax_backward(im.alpha, d_alpha);
    EdgeValues<S> d_y = leaky_relu_edges_backward(d_w, im.mask, beta);

    dS = edge_row_sums(d_y);  // ds_i = sum_u dy_iu
    dD = edge_col_sums(d_y);  // dd_j = sum_u dy_uj

    // dM = ds x a_src + dd x a_dst + A^T dX'
    dM = spmm_semibatched_transposed(im.alpha, d_output, k);
    add_scaled_rows_inplace(dM, dS, params.a_src, h, k);
    add_scaled_rows_inplace(dM, dD, params.a_dst, h, k);
  }
  {
    ScopedMemClass o(MemClass::output);
    g.d_a_src = attention_param_grad(im.M, dS, h, k);
    g.d_a_dst = attention_param_grad(im.M, dD, h, k);
    g.d_theta = gemm(cache.saved_input, dM, true, false);
    if (needs_feature_grad) g.d_input = gemm(dM, params.theta, false, true);
  }
  return g;
}

}  // namespace sgnn
