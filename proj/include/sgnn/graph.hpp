#pragma once

// Graph ingestion: whitespace edge lists ("src dst [weight]", '#' comments),
// MatrixMarket coordinate files, and seeded synthetic graphs. Edges are
// deduplicated keeping the last weight seen and stored in canonical
// (src, dst) order.

#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "sgnn/dense.hpp"
#include "sgnn/rng.hpp"
#include "sgnn/sparse.hpp"

namespace sgnn {

struct GraphEdge {
  index_t src = 0, dst = 0;
  double weight = 1.0;
};

struct Graph {
  index_t n = 0;
  std::vector<GraphEdge> edges;
  std::optional<DenseMatrix<double>> node_features;
  std::vector<index_t> labels;

  index_t num_edges() const { return static_cast<index_t>(edges.size()); }
  double avg_degree() const { return n ? static_cast<double>(edges.size()) / n : 0.0; }
};

enum class GraphFileFormat { edge_list, matrix_market };

namespace detail {

inline void dedup_edges(std::vector<GraphEdge>& edges) {
  std::stable_sort(edges.begin(), edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
    return std::tie(a.src, a.dst) < std::tie(b.src, b.dst);
  });
  std::size_t w = 0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (w > 0 && edges[w - 1].src == edges[i].src && edges[w - 1].dst == edges[i].dst)
      edges[w - 1].weight = edges[i].weight;  // keep last
    else
      edges[w++] = edges[i];
  }
  edges.resize(w);
}

[[noreturn]] inline void parse_fail(const std::string& path, std::size_t line_no,
                                    const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace detail

// Node count of an edge list is inferred as max index + 1.
inline Graph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Graph g;
  std::string line;
  std::size_t line_no = 0;
  index_t max_idx = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    long long s, d;
    if (!(ls >> s)) continue;  // blank or comment-only line
    if (!(ls >> d)) detail::parse_fail(path, line_no, "expected 'src dst [weight]'");
    double w = 1.0;
    ls >> w;
    std::string rest;
    if (ls >> rest) detail::parse_fail(path, line_no, "trailing tokens");
    if (s < 0 || d < 0) detail::parse_fail(path, line_no, "negative node index");
    GraphEdge e{static_cast<index_t>(s), static_cast<index_t>(d), w};
    max_idx = std::max({max_idx, e.src, e.dst});
    g.edges.push_back(e);
  }
  g.n = max_idx + 1;
  detail::dedup_edges(g.edges);
  return g;
}

inline Graph load_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  ++line_no;
  std::istringstream hs(line);
  std::string banner, object, fmt, field, symmetry;
  hs >> banner >> object >> fmt >> field >> symmetry;
  if (banner != "%%MatrixMarket" || object != "matrix" || fmt != "coordinate")
    detail::parse_fail(path, line_no, "expected a MatrixMarket coordinate header");
  const bool pattern = field == "pattern";
  const bool symmetric = symmetry == "symmetric" || symmetry == "skew-symmetric";
  if (field != "real" && field != "integer" && !pattern)
    detail::parse_fail(path, line_no, "unsupported field type '" + field + "'");

  long long n_rows = 0, n_cols = 0, nnz = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream ls(line);
    if (!(ls >> n_rows >> n_cols >> nnz))
      detail::parse_fail(path, line_no, "expected 'rows cols nnz'");
    break;
  }
  if (n_rows != n_cols)
    detail::parse_fail(path, line_no, "adjacency matrix must be square");

  Graph g;
  g.n = static_cast<index_t>(n_rows);
  long long seen = 0;
  while (std::getline(in, line) && seen < nnz) {
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream ls(line);
    long long i, j;
    if (!(ls >> i >> j)) detail::parse_fail(path, line_no, "expected 'i j [value]'");
    double v = 1.0;
    if (!pattern && !(ls >> v)) detail::parse_fail(path, line_no, "missing value");
    if (i < 1 || i > n_rows || j < 1 || j > n_cols)
      detail::parse_fail(path, line_no, "index out of declared range");
    ++seen;
    GraphEdge e{static_cast<index_t>(i - 1), static_cast<index_t>(j - 1), v};
    g.edges.push_back(e);
    if (symmetric && i != j) g.edges.push_back({e.dst, e.src, e.weight});
  }
  if (seen != nnz) throw std::runtime_error(path + ": fewer entries than declared");
  detail::dedup_edges(g.edges);
  return g;
}

inline Graph load_graph(const std::string& path, GraphFileFormat fmt) {
  return fmt == GraphFileFormat::edge_list ? load_edge_list(path) : load_matrix_market(path);
}

inline void save_edge_list(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "# nodes " << g.n << " edges " << g.edges.size() << "\n";
  for (const GraphEdge& e : g.edges) {
    out << e.src << " " << e.dst;
    if (e.weight != 1.0) out << " " << e.weight;
    out << "\n";
  }
}

// Undirected simple graph (each pair stored in both directions), no self
// loops, deterministic for a fixed seed. avg_degree counts directed entries,
// so the number of sampled pairs is n*avg_degree/2.
inline Graph synthetic_graph(index_t n, double avg_degree, std::uint64_t seed) {
  require(n >= 1, "synthetic_graph: n must be >= 1");
  require(avg_degree >= 0, "synthetic_graph: avg_degree must be >= 0");
  require(avg_degree < static_cast<double>(n), "synthetic_graph: avg_degree must be < n");

  Graph g;
  g.n = n;
  const std::uint64_t target_pairs =
      static_cast<std::uint64_t>(avg_degree * static_cast<double>(n) / 2.0 + 0.5);
  if (target_pairs == 0) return g;

  std::unordered_set<std::uint64_t> used;
  used.reserve(target_pairs * 2);
  Rng rng(seed);
  g.edges.reserve(target_pairs * 2);
  while (used.size() < target_pairs) {
    const index_t a = static_cast<index_t>(rng.next_below(static_cast<std::uint64_t>(n)));
    const index_t b = static_cast<index_t>(rng.next_below(static_cast<std::uint64_t>(n)));
    if (a == b) continue;
    const index_t lo = std::min(a, b), hi = std::max(a, b);
    const std::uint64_t key = (static_cast<std::uint64_t>(lo) << 32) | static_cast<std::uint32_t>(hi);
    if (!used.insert(key).second) continue;
    g.edges.push_back({lo, hi, 1.0});
    g.edges.push_back({hi, lo, 1.0});
  }
  detail::dedup_edges(g.edges);
  return g;
}

template <class S>
CooMatrix<S> adjacency(const Graph& g) {
  std::vector<Triplet<S>> ts;
  ts.reserve(g.edges.size());
  for (const GraphEdge& e : g.edges)
    ts.push_back({e.src, e.dst, static_cast<S>(e.weight)});
  return coo_from_triplets(g.n, g.n, std::move(ts));
}

}  // namespace sgnn
