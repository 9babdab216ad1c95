"""CPU sparse GNN training kernels: SpMM/SDDMM, GCN/GAT layers, cost model."""

from ._sgnn import (
    edge_softmax,
    gat_cache_footprint,
    gat_forward,
    gcn_forward,
    gcn_normalize,
    gcn_select_scheme,
    load_graph,
    num_threads,
    sddmm,
    sddmm_cost,
    set_num_threads,
    spmm,
    spmm_cost,
    synthetic_graph,
)

__all__ = [
    "edge_softmax",
    "gat_cache_footprint",
    "gat_forward",
    "gcn_forward",
    "gcn_normalize",
    "gcn_select_scheme",
    "load_graph",
    "num_threads",
    "sddmm",
    "sddmm_cost",
    "set_num_threads",
    "spmm",
    "spmm_cost",
    "synthetic_graph",
]
