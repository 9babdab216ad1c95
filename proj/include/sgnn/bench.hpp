#pragma once

// Benchmark harness: timed runs over the block protocol (forward: 10 warmups
// then 10 blocks x 10 runs; forward+backward: 10 warmups then 5 blocks x 4
// runs), reported as the median over blocks of block_time / runs_per_block.
//
// Counters and memory figures come from a separate single-threaded
// instrumented pass, so they are bit-reproducible across runs; timing uses
// the monotonic clock with full intra-kernel parallelism. Dataset loading and
// format conversion happen once, before any timing.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgnn/graph.hpp"
#include "sgnn/model.hpp"

namespace sgnn {

enum class BenchPass { forward, forward_backward };

inline const char* to_string(BenchPass p) {
  return p == BenchPass::forward ? "fwd" : "fwdbwd";
}

struct BenchConfig {
  std::string dataset;  // file path or "synth:n=N,deg=D[,seed=S]"
  SparseFormat format = SparseFormat::csc;
  ModelConfig model;
  BenchPass pass = BenchPass::forward;
  // -1 keeps the protocol defaults for the selected pass
  int warmups = -1, blocks = -1, runs_per_block = -1;
  std::uint64_t seed = 0;
  bool f32 = false;

  int resolved_warmups() const { return warmups >= 0 ? warmups : 10; }
  int resolved_blocks() const {
    return blocks >= 0 ? blocks : (pass == BenchPass::forward ? 10 : 5);
  }
  int resolved_runs() const {
    return runs_per_block >= 0 ? runs_per_block : (pass == BenchPass::forward ? 10 : 4);
  }
};

struct BenchReport {
  int schema_version = 1;
  // config echo
  std::string dataset, format, model, scheme, caching, pass, precision;
  index_t hidden = 0, heads = 0;
  int warmups = 0, blocks = 0, runs_per_block = 0;
  std::uint64_t seed = 0;
  index_t n = 0;
  count_t q = 0;
  int threads = 1;
  // timing (excluded from reproducibility comparisons)
  double median_s = 0, std_s = 0;
  std::vector<double> block_seconds;
  // deterministic counters
  count_t flops = 0, bytes = 0;
  count_t gemm_flops = 0, spmm_flops = 0, sddmm_flops = 0, edge_flops = 0,
          elementwise_flops = 0;
  count_t peak_mem = 0, cache_mem = 0;
  std::string error;
};

// ---------------------------------------------------------------------------
// Timing
// ---------------------------------------------------------------------------

struct TimedStats {
  double median_s = 0, std_s = 0;
  std::vector<double> block_seconds;  // block time / runs_per_block
};

inline TimedStats run_timed(const std::function<void()>& fn, int warmups, int blocks,
                            int runs_per_block) {
  require(blocks >= 1 && runs_per_block >= 1, "run_timed: blocks*runs must be positive");
  using clock = std::chrono::steady_clock;
  for (int w = 0; w < warmups; ++w) fn();

  TimedStats st;
  st.block_seconds.reserve(static_cast<std::size_t>(blocks));
  for (int b = 0; b < blocks; ++b) {
    const auto t0 = clock::now();
    for (int r = 0; r < runs_per_block; ++r) fn();
    const auto t1 = clock::now();
    st.block_seconds.push_back(std::chrono::duration<double>(t1 - t0).count() /
                               runs_per_block);
  }
  std::vector<double> sorted = st.block_seconds;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  st.median_s = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  double mean = 0;
  for (double x : st.block_seconds) mean += x;
  mean /= static_cast<double>(st.block_seconds.size());
  double var = 0;
  for (double x : st.block_seconds) var += (x - mean) * (x - mean);
  st.std_s = std::sqrt(var / static_cast<double>(st.block_seconds.size()));
  return st;
}

// ---------------------------------------------------------------------------
// Dataset resolution
// ---------------------------------------------------------------------------

// "synth:n=20000,deg=13.77,seed=7" or a file path (.mtx is MatrixMarket,
// anything else is an edge list).
inline Graph resolve_dataset(const std::string& spec, std::uint64_t default_seed) {
  if (spec.rfind("synth:", 0) == 0) {
    index_t n = 0;
    double deg = 0;
    std::uint64_t seed = default_seed;
    std::string rest = spec.substr(6);
    std::size_t pos = 0;
    while (pos < rest.size()) {
      std::size_t end = rest.find(',', pos);
      if (end == std::string::npos) end = rest.size();
      const std::string kv = rest.substr(pos, end - pos);
      const std::size_t eq = kv.find('=');
      require(eq != std::string::npos, "synthetic spec: expected key=value, got '" + kv + "'");
      const std::string key = kv.substr(0, eq);
      const std::string val = kv.substr(eq + 1);
      if (key == "n") n = static_cast<index_t>(std::stoll(val));
      else if (key == "deg") deg = std::stod(val);
      else if (key == "seed") seed = static_cast<std::uint64_t>(std::stoull(val));
      else fail_invalid("synthetic spec: unknown key '" + key + "'");
      pos = end + 1;
    }
    return synthetic_graph(n, deg, seed);
  }
  const bool mm = spec.size() > 4 && spec.substr(spec.size() - 4) == ".mtx";
  return load_graph(spec, mm ? GraphFileFormat::matrix_market : GraphFileFormat::edge_list);
}

// ---------------------------------------------------------------------------
// Benchmark execution
// ---------------------------------------------------------------------------

namespace detail {

template <class S>
void fill_report_counters(BenchReport& rep, const OpCounters& c) {
  rep.flops = c.total_flops();
  rep.bytes = c.model_bytes;
  rep.gemm_flops = c.gemm_flops;
  rep.spmm_flops = c.spmm_flops;
  rep.sddmm_flops = c.sddmm_flops;
  rep.edge_flops = c.edge_flops;
  rep.elementwise_flops = c.elementwise_flops;
}

template <class S>
BenchReport run_benchmark_typed(const BenchConfig& cfg, const Graph& graph) {
  BenchReport rep;
  rep.dataset = cfg.dataset;
  rep.format = format_name(cfg.format);
  rep.model = cfg.model.kind == ModelKind::gcn2 ? "gcn2" : "gat2";
  rep.scheme = to_string(cfg.model.scheme);
  rep.caching = cfg.model.kind == ModelKind::gcn2
                    ? (cfg.model.caching ? "features" : "none")
                    : to_string(cfg.model.gat_level);
  rep.pass = to_string(cfg.pass);
  rep.precision = cfg.f32 ? "f32" : "f64";
  rep.hidden = cfg.model.hidden;
  rep.heads = cfg.model.kind == ModelKind::gat2 ? cfg.model.heads : 0;
  rep.warmups = cfg.resolved_warmups();
  rep.blocks = cfg.resolved_blocks();
  rep.runs_per_block = cfg.resolved_runs();
  rep.seed = cfg.seed;
  rep.n = graph.n;
  rep.threads = num_threads();

  const ModelConfig& mc = cfg.model;
  auto X = DenseMatrix<S>::random_uniform(graph.n, mc.in_features, cfg.seed + 11);
  const index_t out_width = mc.kind == ModelKind::gcn2 ? mc.out_features
                                                       : mc.heads * mc.out_features;
  auto target = DenseMatrix<S>::random_uniform(graph.n, out_width, cfg.seed + 12);

  // preprocessing, outside any timing
  std::optional<Gcn2Model<S>> gcn;
  std::optional<Gat2Model<S>> gat;
  AdjacencyOp<S> adj;
  PatternPtr pattern;
  std::function<void()> step;
  if (mc.kind == ModelKind::gcn2) {
    gcn.emplace(mc, cfg.seed + 13);
    adj = AdjacencyOp<S>(
        convert(gcn_normalize(SparseMatrix<S>{adjacency<S>(graph)}), cfg.format));
    rep.q = adj.nnz();
    step = [&, fwd_only = cfg.pass == BenchPass::forward] {
      typename Gcn2Model<S>::Caches caches;
      auto out = gcn->forward(X, adj, caches);
      if (!fwd_only) {
        auto l = loss_mse(out, target);
        auto grads = gcn->backward(l.grad, adj, caches);
      }
    };
  } else {
    gat.emplace(mc, cfg.seed + 13);
    auto csr = coo_to_csr(to_coo(add_self_loops(SparseMatrix<S>{adjacency<S>(graph)})));
    pattern = SparsePattern::from_csr(csr);
    rep.q = pattern->nnz();
    step = [&, fwd_only = cfg.pass == BenchPass::forward] {
      typename Gat2Model<S>::Caches caches;
      auto out = gat->forward(X, pattern, caches);
      if (!fwd_only) {
        auto l = loss_mse(out, target);
        auto grads = gat->backward(l.grad, pattern, caches);
      }
    };
  }

  // instrumented single-threaded pass: counters, peak and cache memory
  {
    const int threads_before = num_threads();
    set_num_threads(1);
    auto& mt = MemTracker::instance();
    const std::size_t live0 = mt.live_all();
    const std::size_t cache0 = mt.live(MemClass::cache);
    mt.reset_peaks();
    reset_counters();
    if (mc.kind == ModelKind::gcn2) {
      typename Gcn2Model<S>::Caches caches;
      auto out = gcn->forward(X, adj, caches);
      rep.cache_mem = static_cast<count_t>(mt.live(MemClass::cache) - cache0);
      if (cfg.pass == BenchPass::forward_backward) {
        auto l = loss_mse(out, target);
        auto grads = gcn->backward(l.grad, adj, caches);
      }
    } else {
      typename Gat2Model<S>::Caches caches;
      auto out = gat->forward(X, pattern, caches);
      rep.cache_mem = static_cast<count_t>(mt.live(MemClass::cache) - cache0);
      if (cfg.pass == BenchPass::forward_backward) {
        auto l = loss_mse(out, target);
        auto grads = gat->backward(l.grad, pattern, caches);
      }
    }
    rep.peak_mem = static_cast<count_t>(mt.peak_all() - live0);
    fill_report_counters<S>(rep, counters());
    set_num_threads(threads_before);
  }

  TimedStats st = run_timed(step, rep.warmups, rep.blocks, rep.runs_per_block);
  rep.median_s = st.median_s;
  rep.std_s = st.std_s;
  rep.block_seconds = st.block_seconds;
  return rep;
}

}  // namespace detail

inline BenchReport run_benchmark(const BenchConfig& cfg) {
  BenchReport rep;
  try {
    Graph graph = resolve_dataset(cfg.dataset, cfg.seed);
    return cfg.f32 ? detail::run_benchmark_typed<float>(cfg, graph)
                   : detail::run_benchmark_typed<double>(cfg, graph);
  } catch (const std::exception& e) {
    rep.dataset = cfg.dataset;
    rep.format = format_name(cfg.format);
    rep.model = cfg.model.kind == ModelKind::gcn2 ? "gcn2" : "gat2";
    rep.scheme = to_string(cfg.model.scheme);
    rep.pass = to_string(cfg.pass);
    rep.hidden = cfg.model.hidden;
    rep.error = e.what();
    return rep;
  }
}

// Grid executed sequentially; failed cells carry their error and do not stop
// the sweep.
inline std::vector<BenchReport> sweep(const std::vector<BenchConfig>& grid) {
  std::vector<BenchReport> out;
  out.reserve(grid.size());
  for (const BenchConfig& cfg : grid) out.push_back(run_benchmark(cfg));
  return out;
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

inline std::string csv_header() {
  return "dataset,format,model,hidden,heads,scheme,caching,pass,median_s,std_s,flops,bytes,"
         "peak_mem,cache_mem";
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string to_csv_row(const BenchReport& r) {
  char num[64];
  std::string row;
  auto add = [&row](const std::string& s) {
    if (!row.empty()) row += ',';
    row += csv_quote(s);
  };
  add(r.dataset);
  add(r.format);
  add(r.model);
  add(std::to_string(r.hidden));
  add(std::to_string(r.heads));
  add(r.scheme);
  add(r.caching);
  add(r.pass);
  if (r.error.empty()) {
    std::snprintf(num, sizeof num, "%.9e", r.median_s);
    add(num);
    std::snprintf(num, sizeof num, "%.9e", r.std_s);
    add(num);
    add(std::to_string(r.flops));
    add(std::to_string(r.bytes));
    add(std::to_string(r.peak_mem));
    add(std::to_string(r.cache_mem));
  } else {
    add("");
    add("");
    add("");
    add("");
    add("");
    add("");
  }
  return row;
}

inline std::string reports_to_csv(const std::vector<BenchReport>& reports) {
  std::string out = csv_header() + "\n";
  for (const BenchReport& r : reports) out += to_csv_row(r) + "\n";
  return out;
}

inline nlohmann::json report_to_json(const BenchReport& r) {
  nlohmann::json j;
  j["schema_version"] = r.schema_version;
  j["dataset"] = r.dataset;
  j["format"] = r.format;
  j["model"] = r.model;
  j["hidden"] = r.hidden;
  j["heads"] = r.heads;
  j["scheme"] = r.scheme;
  j["caching"] = r.caching;
  j["pass"] = r.pass;
  j["precision"] = r.precision;
  j["warmups"] = r.warmups;
  j["blocks"] = r.blocks;
  j["runs_per_block"] = r.runs_per_block;
  j["seed"] = r.seed;
  j["n"] = r.n;
  j["q"] = r.q;
  j["threads"] = r.threads;
  j["median_s"] = r.median_s;
  j["std_s"] = r.std_s;
  j["block_seconds"] = r.block_seconds;
  j["flops"] = r.flops;
  j["bytes"] = r.bytes;
  j["gemm_flops"] = r.gemm_flops;
  j["spmm_flops"] = r.spmm_flops;
  j["sddmm_flops"] = r.sddmm_flops;
  j["edge_flops"] = r.edge_flops;
  j["elementwise_flops"] = r.elementwise_flops;
  j["peak_mem"] = r.peak_mem;
  j["cache_mem"] = r.cache_mem;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

inline BenchReport report_from_json(const nlohmann::json& j) {
  BenchReport r;
  r.schema_version = j.at("schema_version").get<int>();
  r.dataset = j.at("dataset").get<std::string>();
  r.format = j.at("format").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.hidden = j.at("hidden").get<index_t>();
  r.heads = j.at("heads").get<index_t>();
  r.scheme = j.at("scheme").get<std::string>();
  r.caching = j.at("caching").get<std::string>();
  r.pass = j.at("pass").get<std::string>();
  r.precision = j.at("precision").get<std::string>();
  r.warmups = j.at("warmups").get<int>();
  r.blocks = j.at("blocks").get<int>();
  r.runs_per_block = j.at("runs_per_block").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.n = j.at("n").get<index_t>();
  r.q = j.at("q").get<count_t>();
  r.threads = j.at("threads").get<int>();
  r.median_s = j.at("median_s").get<double>();
  r.std_s = j.at("std_s").get<double>();
  r.block_seconds = j.at("block_seconds").get<std::vector<double>>();
  r.flops = j.at("flops").get<count_t>();
  r.bytes = j.at("bytes").get<count_t>();
  r.gemm_flops = j.at("gemm_flops").get<count_t>();
  r.spmm_flops = j.at("spmm_flops").get<count_t>();
  r.sddmm_flops = j.at("sddmm_flops").get<count_t>();
  r.edge_flops = j.at("edge_flops").get<count_t>();
  r.elementwise_flops = j.at("elementwise_flops").get<count_t>();
  r.peak_mem = j.at("peak_mem").get<count_t>();
  r.cache_mem = j.at("cache_mem").get<count_t>();
  if (j.contains("error")) r.error = j.at("error").get<std::string>();
  return r;
}

inline nlohmann::json reports_to_json(const std::vector<BenchReport>& reports) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["reports"] = nlohmann::json::array();
  for (const BenchReport& r : reports) j["reports"].push_back(report_to_json(r));
  return j;
}

enum class ReportFormat { csv, json };

inline void emit_report(const std::vector<BenchReport>& reports, ReportFormat fmt,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  if (fmt == ReportFormat::csv)
    out << reports_to_csv(reports);
  else
    out << reports_to_json(reports).dump(2) << "\n";
}

}  // namespace sgnn
