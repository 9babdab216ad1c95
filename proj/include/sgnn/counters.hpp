#pragma once

// Analytic FLOP / traffic counters. Kernels charge their model cost once per
// call at the entry point, so counts are exact and reproducible regardless of
// thread count. "model_bytes" follows the same I/O conventions as the cost
// module (inputs read once, outputs written once, per-edge dense fetches for
// irregular access).

#include "sgnn/common.hpp"

namespace sgnn {

struct OpCounters {
  count_t gemm_flops = 0;         // dense matmul (incl. node-score projections)
  count_t spmm_flops = 0;
  count_t sddmm_flops = 0;
  count_t edge_flops = 0;         // edge score/softmax/leaky-relu work
  count_t elementwise_flops = 0;  // bias, activations, reductions, axpy
  count_t model_bytes = 0;

  count_t total_flops() const {
    return gemm_flops + spmm_flops + sddmm_flops + edge_flops + elementwise_flops;
  }

  OpCounters operator-(const OpCounters& o) const {
    OpCounters r;
    r.gemm_flops = gemm_flops - o.gemm_flops;
    r.spmm_flops = spmm_flops - o.spmm_flops;
    r.sddmm_flops = sddmm_flops - o.sddmm_flops;
    r.edge_flops = edge_flops - o.edge_flops;
    r.elementwise_flops = elementwise_flops - o.elementwise_flops;
    r.model_bytes = model_bytes - o.model_bytes;
    return r;
  }
};

inline OpCounters& counters() {
  static OpCounters c;
  return c;
}

inline void reset_counters() { counters() = OpCounters{}; }

}  // namespace sgnn
