// Python bindings for the main operations: sparse kernels, the cost model,
// the scheme selector and single GCN/GAT layer passes. Matrices cross the
// boundary as numpy arrays (float64, int32 indices); sparse inputs are COO
// triplets which are canonicalized on entry.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sgnn/bench.hpp"
#include "sgnn/cost.hpp"
#include "sgnn/gat.hpp"
#include "sgnn/gcn.hpp"
#include "sgnn/graph.hpp"
#include "sgnn/kernels.hpp"

namespace py = pybind11;
using namespace sgnn;

namespace {

using ArrayD = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ArrayI = py::array_t<index_t, py::array::c_style | py::array::forcecast>;

DenseMatrix<double> to_matrix(const ArrayD& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
  DenseMatrix<double> m(static_cast<index_t>(a.shape(0)), static_cast<index_t>(a.shape(1)));
  std::memcpy(m.mutable_data(), a.data(), sizeof(double) * m.size());
  return m;
}

template <class T>
py::array_t<T, py::array::c_style | py::array::forcecast> make_1d(py::ssize_t n) {
  return py::array_t<T, py::array::c_style | py::array::forcecast>(
      std::vector<py::ssize_t>{n});
}

ArrayD from_matrix(const DenseMatrix<double>& m) {
  ArrayD a({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  std::memcpy(a.mutable_data(), m.data(), sizeof(double) * m.size());
  return a;
}

CooMatrix<double> to_coo_matrix(index_t n_rows, index_t n_cols, const ArrayI& rows,
                                const ArrayI& cols, const ArrayD& vals) {
  if (rows.size() != cols.size() || rows.size() != vals.size())
    throw std::invalid_argument("rows/cols/vals must have equal length");
  std::vector<Triplet<double>> ts(static_cast<std::size_t>(rows.size()));
  for (py::ssize_t i = 0; i < rows.size(); ++i)
    ts[static_cast<std::size_t>(i)] = {rows.data()[i], cols.data()[i], vals.data()[i]};
  return coo_from_triplets(n_rows, n_cols, std::move(ts));
}

SparseFormat format_from_name(const std::string& s) {
  if (s == "coo") return SparseFormat::coo;
  if (s == "csr") return SparseFormat::csr;
  if (s == "csc") return SparseFormat::csc;
  if (s == "ellpack") return SparseFormat::ellpack;
  if (s == "hybrid") return SparseFormat::hybrid;
  throw std::invalid_argument("unknown format '" + s + "'");
}

GatCacheLevel level_from_name(const std::string& s) {
  if (s == "none") return GatCacheLevel::none;
  if (s == "features") return GatCacheLevel::features;
  if (s == "node-attn") return GatCacheLevel::node_attention;
  if (s == "full") return GatCacheLevel::full;
  throw std::invalid_argument("unknown caching level '" + s + "'");
}

py::dict cost_to_dict(const CostEstimate& c) {
  py::dict d;
  d["flops"] = c.flops;
  d["bytes"] = c.bytes;
  d["operational_intensity"] = c.operational_intensity;
  return d;
}

}  // namespace

PYBIND11_MODULE(_sgnn, m) {
  m.doc() = "CPU sparse GNN training kernels: SpMM/SDDMM, GCN/GAT layers, cost model";

  m.def(
      "synthetic_graph",
      [](index_t n, double avg_degree, std::uint64_t seed) {
        Graph g = synthetic_graph(n, avg_degree, seed);
        ArrayI src = make_1d<index_t>(static_cast<py::ssize_t>(g.edges.size()));
        ArrayI dst = make_1d<index_t>(static_cast<py::ssize_t>(g.edges.size()));
        for (std::size_t i = 0; i < g.edges.size(); ++i) {
          src.mutable_data()[i] = g.edges[i].src;
          dst.mutable_data()[i] = g.edges[i].dst;
        }
        return py::make_tuple(g.n, src, dst);
      },
      py::arg("n"), py::arg("avg_degree"), py::arg("seed"),
      "Seeded undirected simple graph; returns (n, src, dst).");

  m.def(
      "load_graph",
      [](const std::string& path, const std::string& fmt) {
        Graph g = load_graph(path, fmt == "matrix-market" ? GraphFileFormat::matrix_market
                                                          : GraphFileFormat::edge_list);
        ArrayI src = make_1d<index_t>(static_cast<py::ssize_t>(g.edges.size()));
        ArrayI dst = make_1d<index_t>(static_cast<py::ssize_t>(g.edges.size()));
        ArrayD w = make_1d<double>(static_cast<py::ssize_t>(g.edges.size()));
        for (std::size_t i = 0; i < g.edges.size(); ++i) {
          src.mutable_data()[i] = g.edges[i].src;
          dst.mutable_data()[i] = g.edges[i].dst;
          w.mutable_data()[i] = g.edges[i].weight;
        }
        py::dict d;
        d["n"] = g.n;
        d["src"] = src;
        d["dst"] = dst;
        d["weight"] = w;
        return d;
      },
      py::arg("path"), py::arg("format") = "edge-list");

  m.def(
      "gcn_normalize",
      [](index_t n, const ArrayI& rows, const ArrayI& cols, const ArrayD& vals) {
        auto coo = to_coo(gcn_normalize(SparseMatrix<double>{to_coo_matrix(n, n, rows, cols, vals)}));
        ArrayI r = make_1d<index_t>(coo.nnz());
        ArrayI c = make_1d<index_t>(coo.nnz());
        ArrayD v = make_1d<double>(coo.nnz());
        for (index_t e = 0; e < coo.nnz(); ++e) {
          r.mutable_data()[e] = coo.rows[static_cast<std::size_t>(e)];
          c.mutable_data()[e] = coo.cols[static_cast<std::size_t>(e)];
          v.mutable_data()[e] = coo.vals[static_cast<std::size_t>(e)];
        }
        return py::make_tuple(r, c, v);
      },
      py::arg("n"), py::arg("rows"), py::arg("cols"), py::arg("vals"),
      "Symmetric degree normalization of A + I; returns COO triplets.");

  m.def(
      "spmm",
      [](index_t n_rows, index_t n_cols, const ArrayI& rows, const ArrayI& cols,
         const ArrayD& vals, const ArrayD& B, const std::string& format) {
        auto coo = to_coo_matrix(n_rows, n_cols, rows, cols, vals);
        auto mat = convert(SparseMatrix<double>{coo}, format_from_name(format));
        return from_matrix(spmm(mat, to_matrix(B)));
      },
      py::arg("n_rows"), py::arg("n_cols"), py::arg("rows"), py::arg("cols"), py::arg("vals"),
      py::arg("B"), py::arg("format") = "csr",
      "Sparse times dense through the chosen storage format.");

  m.def(
      "sddmm",
      [](index_t n, const ArrayI& rows, const ArrayI& cols, const ArrayD& B, const ArrayD& C) {
        std::vector<double> ones(static_cast<std::size_t>(rows.size()), 1.0);
        ArrayD vals = make_1d<double>(rows.size());
        std::memcpy(vals.mutable_data(), ones.data(), sizeof(double) * ones.size());
        auto csr = coo_to_csr(to_coo_matrix(n, n, rows, cols, vals));
        auto pattern = SparsePattern::from_csr(csr);
        auto out = sddmm<double>(pattern, nullptr, to_matrix(B), to_matrix(C));
        ArrayI r = make_1d<index_t>(pattern->nnz());
        ArrayI c = make_1d<index_t>(pattern->nnz());
        ArrayD v = make_1d<double>(pattern->nnz());
        for (index_t i = 0; i < pattern->n(); ++i)
          for (index_t e = pattern->rowptr()[i]; e < pattern->rowptr()[i + 1]; ++e) {
            r.mutable_data()[e] = i;
            c.mutable_data()[e] = pattern->cols()[e];
            v.mutable_data()[e] = out.at(0, e);
          }
        return py::make_tuple(r, c, v);
      },
      py::arg("n"), py::arg("rows"), py::arg("cols"), py::arg("B"), py::arg("C"),
      "Dense product sampled at the pattern positions; returns COO triplets.");

  m.def(
      "edge_softmax",
      [](index_t n, const ArrayI& rows, const ArrayI& cols, const ArrayD& scores) {
        ArrayD ones = make_1d<double>(rows.size());
        for (py::ssize_t i = 0; i < rows.size(); ++i) ones.mutable_data()[i] = 1.0;
        auto csr = coo_to_csr(to_coo_matrix(n, n, rows, cols, ones));
        auto pattern = SparsePattern::from_csr(csr);
        if (scores.size() != pattern->nnz())
          throw std::invalid_argument("scores length must equal the deduplicated nnz");
        EdgeValues<double> w;
        w.pattern = pattern;
        w.heads = 1;
        w.vals = DenseMatrix<double>(1, pattern->nnz());
        std::memcpy(w.vals.mutable_data(), scores.data(), sizeof(double) * w.vals.size());
        auto alpha = edge_softmax(w);
        ArrayD out = make_1d<double>(pattern->nnz());
        std::memcpy(out.mutable_data(), alpha.vals.data(), sizeof(double) * alpha.vals.size());
        return out;
      },
      py::arg("n"), py::arg("rows"), py::arg("cols"), py::arg("scores"),
      "Row-group softmax over a self-loop pattern given canonical-order scores.");

  m.def(
      "spmm_cost",
      [](const std::string& format, count_t n, count_t q, count_t p, count_t f,
         count_t scalar_bytes, count_t index_bytes) {
        return cost_to_dict(spmm_cost(format_from_name(format), n, q, p, f, scalar_bytes,
                                      index_bytes));
      },
      py::arg("format"), py::arg("n"), py::arg("q"), py::arg("p") = 0, py::arg("f") = 64,
      py::arg("scalar_bytes") = 4, py::arg("index_bytes") = 4);

  m.def(
      "sddmm_cost",
      [](const std::string& format, count_t n, count_t q, count_t p, count_t f,
         count_t scalar_bytes, count_t index_bytes) {
        return cost_to_dict(sddmm_cost(format_from_name(format), n, q, p, f, scalar_bytes,
                                       index_bytes));
      },
      py::arg("format"), py::arg("n"), py::arg("q"), py::arg("p") = 0, py::arg("f") = 64,
      py::arg("scalar_bytes") = 4, py::arg("index_bytes") = 4);

  m.def(
      "gcn_select_scheme",
      [](count_t m_in, count_t k, bool needs_feature_grad, bool caching) {
        auto s = gcn_select_scheme(m_in, k, needs_feature_grad, caching);
        py::dict d;
        d["forward"] = to_string(s.forward);
        d["backward"] = to_string(s.backward);
        d["caching"] = s.caching;
        return d;
      },
      py::arg("m"), py::arg("k"), py::arg("needs_feature_grad") = false,
      py::arg("caching") = false);

  m.def("gat_cache_footprint",
        [](const std::string& level, count_t n, count_t h, count_t k, count_t q,
           count_t scalar_bytes) {
          return gat_cache_footprint(level_from_name(level), n, h, k, q, scalar_bytes);
        },
        py::arg("level"), py::arg("n"), py::arg("h"), py::arg("k"), py::arg("q"),
        py::arg("scalar_bytes") = 4);

  m.def(
      "gcn_forward",
      [](index_t n, const ArrayI& rows, const ArrayI& cols, const ArrayD& vals,
         const ArrayD& X, const ArrayD& theta, const ArrayD& bias, const std::string& format,
         const std::string& scheme) {
        AdjacencyOp<double> A(
            convert(SparseMatrix<double>{to_coo_matrix(n, n, rows, cols, vals)},
                    format_from_name(format)));
        GcnParams<double> params;
        params.theta = to_matrix(theta);
        params.bias.assign(bias.data(), bias.data() + bias.size());
        SchemePolicy policy = SchemePolicy::adaptive;
        if (scheme == "transform-first") policy = SchemePolicy::force_transform_first;
        else if (scheme == "propagate-first") policy = SchemePolicy::force_propagate_first;
        else if (scheme != "adaptive") throw std::invalid_argument("unknown scheme");
        auto choice =
            resolve_scheme(policy, params.theta.rows(), params.theta.cols(), false, false);
        auto r = gcn_forward(to_matrix(X), A, params, choice);
        return from_matrix(r.output);
      },
      py::arg("n"), py::arg("rows"), py::arg("cols"), py::arg("vals"), py::arg("X"),
      py::arg("theta"), py::arg("bias"), py::arg("format") = "csc",
      py::arg("scheme") = "adaptive",
      "Single GCN layer forward over an already-normalized adjacency.");

  m.def(
      "gat_forward",
      [](index_t n, const ArrayI& rows, const ArrayI& cols, const ArrayD& X,
         const ArrayD& theta, const ArrayD& a_src, const ArrayD& a_dst, const ArrayD& bias,
         index_t heads, double beta) {
        ArrayD ones = make_1d<double>(rows.size());
        for (py::ssize_t i = 0; i < rows.size(); ++i) ones.mutable_data()[i] = 1.0;
        auto base = to_coo_matrix(n, n, rows, cols, ones);
        auto csr = coo_to_csr(to_coo(add_self_loops(SparseMatrix<double>{base})));
        auto pattern = SparsePattern::from_csr(csr);
        GatParams<double> params;
        params.heads = heads;
        params.theta = to_matrix(theta);
        params.a_src = to_matrix(a_src);
        params.a_dst = to_matrix(a_dst);
        params.bias.assign(bias.data(), bias.data() + bias.size());
        require(params.theta.cols() % heads == 0, "theta width must be heads*k");
        params.out_features = params.theta.cols() / heads;
        auto r = gat_forward(to_matrix(X), pattern, params, beta, GatCacheLevel::none);
        return from_matrix(r.output);
      },
      py::arg("n"), py::arg("rows"), py::arg("cols"), py::arg("X"), py::arg("theta"),
      py::arg("a_src"), py::arg("a_dst"), py::arg("bias"), py::arg("heads") = 1,
      py::arg("beta") = 0.2,
      "Single multi-head GAT layer forward; self loops are added to the pattern.");

  m.def("num_threads", &num_threads);
  m.def("set_num_threads", &set_num_threads, py::arg("n"));
}
