// sgnn-bench: benchmark and inspection CLI.
//
//   bench      time one configuration and emit a report
//   sweep      run a grid of configurations into one report file
//   cost       print the analytic FLOP / byte / intensity model as CSV
//   gradcheck  finite-difference check of the model gradients
//   gen        write a synthetic edge-list graph
//
// Every flag can also be set through an SGNN_* environment variable.

#include <CLI11.hpp>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <iostream>
#include <sstream>

#include "sgnn/bench.hpp"
#include "sgnn/cost.hpp"

using namespace sgnn;

namespace {

SparseFormat parse_format(const std::string& s) {
  if (s == "coo") return SparseFormat::coo;
  if (s == "csr") return SparseFormat::csr;
  if (s == "csc") return SparseFormat::csc;
  if (s == "ellpack") return SparseFormat::ellpack;
  if (s == "hybrid") return SparseFormat::hybrid;
  throw CLI::ValidationError("--format", "unknown format '" + s + "'");
}

SchemePolicy parse_scheme(const std::string& s) {
  if (s == "adaptive") return SchemePolicy::adaptive;
  if (s == "transform-first") return SchemePolicy::force_transform_first;
  if (s == "propagate-first") return SchemePolicy::force_propagate_first;
  throw CLI::ValidationError("--scheme", "unknown scheme '" + s + "'");
}

GatCacheLevel parse_caching_level(const std::string& s) {
  if (s == "none") return GatCacheLevel::none;
  if (s == "features") return GatCacheLevel::features;
  if (s == "node-attn") return GatCacheLevel::node_attention;
  if (s == "full") return GatCacheLevel::full;
  throw CLI::ValidationError("--caching", "unknown caching level '" + s + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct CommonOpts {
  std::string dataset;
  std::string format = "csc";
  std::string model = "gcn2";
  std::string hidden = "64";
  sgnn::index_t heads = 8;
  std::string scheme = "adaptive";
  std::string caching = "none";
  std::string pass = "fwd";
  std::string feature_grad = "off";
  std::string precision = "f64";
  sgnn::index_t in_features = 128;
  sgnn::index_t classes = 32;
  std::uint64_t seed = 0;
  int warmups = -1, blocks = -1, runs = -1;
  int threads = 0;
  std::string out = "-";
  std::string emit = "csv";
};

void add_common_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--dataset", o.dataset,
                  "graph file (.mtx or edge list) or synth:n=N,deg=D[,seed=S]")
      ->required()
      ->envname("SGNN_DATASET");
  cmd->add_option("--format", o.format, "sparse format: coo|csr|csc|ellpack|hybrid")
      ->envname("SGNN_FORMAT");
  cmd->add_option("--model", o.model, "gcn2|gat2")->envname("SGNN_MODEL");
  cmd->add_option("--hidden", o.hidden, "hidden size (comma list in sweep)")
      ->envname("SGNN_HIDDEN");
  cmd->add_option("--heads", o.heads, "attention heads (gat2)")->envname("SGNN_HEADS");
  cmd->add_option("--scheme", o.scheme, "adaptive|transform-first|propagate-first")
      ->envname("SGNN_SCHEME");
  cmd->add_option("--caching", o.caching, "none|features|node-attn|full")
      ->envname("SGNN_CACHING");
  cmd->add_option("--pass", o.pass, "fwd|fwdbwd")->envname("SGNN_PASS");
  cmd->add_option("--feature-grad", o.feature_grad, "on|off: compute input feature gradients")
      ->envname("SGNN_FEATURE_GRAD");
  cmd->add_option("--precision", o.precision, "f32|f64")->envname("SGNN_PRECISION");
  cmd->add_option("--in-features", o.in_features, "input feature width")
      ->envname("SGNN_IN_FEATURES");
  cmd->add_option("--classes", o.classes, "output width of the top layer")
      ->envname("SGNN_CLASSES");
  cmd->add_option("--seed", o.seed, "rng seed")->envname("SGNN_SEED");
  cmd->add_option("--warmups", o.warmups, "warmup runs (-1: protocol default)")
      ->envname("SGNN_WARMUPS");
  cmd->add_option("--blocks", o.blocks, "timed blocks (-1: protocol default)")
      ->envname("SGNN_BLOCKS");
  cmd->add_option("--runs", o.runs, "runs per block (-1: protocol default)")
      ->envname("SGNN_RUNS");
  cmd->add_option("--threads", o.threads, "kernel threads (0: auto)")->envname("SGNN_THREADS");
  cmd->add_option("--out", o.out, "output path, '-' for stdout")->envname("SGNN_OUT");
  cmd->add_option("--emit", o.emit, "csv|json")->envname("SGNN_EMIT");
}

BenchConfig config_from(const CommonOpts& o, const std::string& hidden_value,
                        const std::string& format_value, const std::string& caching_value,
                        const std::string& scheme_value) {
  BenchConfig cfg;
  cfg.dataset = o.dataset;
  cfg.format = parse_format(format_value);
  cfg.pass = o.pass == "fwdbwd" ? BenchPass::forward_backward : BenchPass::forward;
  if (o.pass != "fwd" && o.pass != "fwdbwd")
    throw CLI::ValidationError("--pass", "expected fwd or fwdbwd");
  cfg.warmups = o.warmups;
  cfg.blocks = o.blocks;
  cfg.runs_per_block = o.runs;
  cfg.seed = o.seed;
  if (o.precision != "f32" && o.precision != "f64")
    throw CLI::ValidationError("--precision", "expected f32 or f64");
  cfg.f32 = o.precision == "f32";

  ModelConfig& mc = cfg.model;
  if (o.model == "gcn2") mc.kind = ModelKind::gcn2;
  else if (o.model == "gat2") mc.kind = ModelKind::gat2;
  else throw CLI::ValidationError("--model", "expected gcn2 or gat2");
  mc.in_features = o.in_features;
  mc.hidden = static_cast<sgnn::index_t>(std::stoll(hidden_value));
  mc.out_features = o.classes;
  mc.heads = o.heads;
  mc.scheme = parse_scheme(scheme_value);
  mc.input_grad = o.feature_grad == "on";
  if (o.feature_grad != "on" && o.feature_grad != "off")
    throw CLI::ValidationError("--feature-grad", "expected on or off");

  const GatCacheLevel level = parse_caching_level(caching_value);
  if (mc.kind == ModelKind::gcn2) {
    if (level != GatCacheLevel::none && level != GatCacheLevel::features)
      throw CLI::ValidationError("--caching", "gcn2 supports none or features");
    mc.caching = level == GatCacheLevel::features;
  } else {
    mc.gat_level = level;
  }
  return cfg;
}

void write_reports(const std::vector<BenchReport>& reports, const CommonOpts& o) {
  if (o.emit != "csv" && o.emit != "json")
    throw CLI::ValidationError("--emit", "expected csv or json");
  const ReportFormat fmt = o.emit == "csv" ? ReportFormat::csv : ReportFormat::json;
  if (o.out == "-") {
    if (fmt == ReportFormat::csv)
      std::cout << reports_to_csv(reports);
    else
      std::cout << reports_to_json(reports).dump(2) << "\n";
  } else {
    emit_report(reports, fmt, o.out);
    std::cerr << "wrote " << reports.size() << " report(s) to " << o.out << "\n";
  }
}

int run_bench(const CommonOpts& o, bool grid) {
  if (o.threads > 0) set_num_threads(o.threads);
  std::vector<BenchConfig> cells;
  const auto hiddens = grid ? split_list(o.hidden) : std::vector<std::string>{o.hidden};
  const auto formats = grid ? split_list(o.format) : std::vector<std::string>{o.format};
  const auto cachings = grid ? split_list(o.caching) : std::vector<std::string>{o.caching};
  const auto schemes = grid ? split_list(o.scheme) : std::vector<std::string>{o.scheme};
  for (const auto& h : hiddens)
    for (const auto& f : formats)
      for (const auto& c : cachings)
        for (const auto& s : schemes) cells.push_back(config_from(o, h, f, c, s));

  auto reports = sweep(cells);
  write_reports(reports, o);
  int failures = 0;
  for (const auto& r : reports)
    if (!r.error.empty()) {
      std::cerr << "cell failed: " << r.dataset << " hidden=" << r.hidden << ": " << r.error
                << "\n";
      ++failures;
    }
  return failures == 0 ? 0 : 1;
}

int run_cost(count_t n, count_t q, count_t p, count_t f, const std::string& op,
             const std::string& stats_name, const std::string& out) {
  if (!stats_name.empty()) {
    const DatasetStats* st = find_dataset(stats_name);
    if (!st) throw CLI::ValidationError("--dataset-stats", "unknown dataset '" + stats_name + "'");
    n = st->nodes;
    q = st->edges;
    p = st->max_degree;
  }
  std::ostringstream csv;
  csv << "op,format,n,q,p,f,flops,bytes,oi\n";
  auto row = [&](const char* opname, SparseFormat fmt, const CostEstimate& c, count_t pp) {
    char oi[32];
    std::snprintf(oi, sizeof oi, "%.6f", c.operational_intensity);
    csv << opname << ',' << format_name(fmt) << ',' << n << ',' << q << ',' << pp << ',' << f
        << ',' << c.flops << ',' << c.bytes << ',' << oi << "\n";
  };
  for (SparseFormat fmt : {SparseFormat::csr, SparseFormat::csc, SparseFormat::coo,
                           SparseFormat::ellpack}) {
    const count_t pp = fmt == SparseFormat::ellpack ? p : 0;
    if (fmt == SparseFormat::ellpack && p <= 0) continue;  // width unknown
    if (op == "spmm" || op == "both") row("spmm", fmt, spmm_cost(fmt, n, q, pp, f), pp);
    if (op == "sddmm" || op == "both") row("sddmm", fmt, sddmm_cost(fmt, n, q, pp, f), pp);
  }
  if (out == "-") {
    std::cout << csv.str();
  } else {
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot open " + out);
    os << csv.str();
  }
  return 0;
}

template <class S>
int gradcheck_impl(const CommonOpts& o, sgnn::index_t n, double deg, double eps, double tol) {
  Graph g = o.dataset.empty() ? synthetic_graph(n, deg, o.seed + 1)
                              : resolve_dataset(o.dataset, o.seed + 1);
  auto X = DenseMatrix<S>::random_uniform(g.n, o.in_features, o.seed + 2);
  const sgnn::index_t hidden = static_cast<sgnn::index_t>(std::stoll(o.hidden));

  GradCheckReport rep;
  if (o.model == "gcn2") {
    ModelConfig mc;
    mc.kind = ModelKind::gcn2;
    mc.in_features = o.in_features;
    mc.hidden = hidden;
    mc.out_features = o.classes;
    mc.scheme = parse_scheme(o.scheme);
    mc.caching = parse_caching_level(o.caching) != GatCacheLevel::none;
    mc.input_grad = true;
    Gcn2Model<S> model(mc, o.seed + 3);
    AdjacencyOp<S> A(gcn_normalize(SparseMatrix<S>{adjacency<S>(g)}));

    typename Gcn2Model<S>::Caches caches;
    auto out = model.forward(X, A, caches);
    auto l = loss_sum(out);
    auto grads = model.backward(l.grad, A, caches);
    auto loss_fn = [&]() {
      typename Gcn2Model<S>::Caches c;
      return loss_sum(model.forward(X, A, c)).value;
    };
    rep = gradient_check<S>(loss_fn, model.param_tensors(),
                            Gcn2Model<S>::grad_vectors(grads), eps, o.seed + 4);
  } else {
    ModelConfig mc;
    mc.kind = ModelKind::gat2;
    mc.in_features = o.in_features;
    mc.hidden = hidden;
    mc.out_features = o.classes;
    mc.heads = o.heads;
    mc.gat_level = parse_caching_level(o.caching);
    mc.input_grad = true;
    Gat2Model<S> model(mc, o.seed + 3);
    auto csr = coo_to_csr(to_coo(add_self_loops(SparseMatrix<S>{adjacency<S>(g)})));
    auto pattern = SparsePattern::from_csr(csr);

    typename Gat2Model<S>::Caches caches;
    auto out = model.forward(X, pattern, caches);
    auto l = loss_sum(out);
    auto grads = model.backward(l.grad, pattern, caches);
    auto loss_fn = [&]() {
      typename Gat2Model<S>::Caches c;
      return loss_sum(model.forward(X, pattern, c)).value;
    };
    rep = gradient_check<S>(loss_fn, model.param_tensors(),
                            Gat2Model<S>::grad_vectors(grads), eps, o.seed + 4);
  }
  std::cout << "model=" << o.model << " coords=" << rep.coords_checked
            << " max_rel_err=" << rep.max_rel_err << " worst=" << rep.worst_tensor
            << " tol=" << tol << " -> " << (rep.max_rel_err < tol ? "PASS" : "FAIL") << "\n";
  return rep.max_rel_err < tol ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // keep large intermediates on the arena so timing does not measure
  // map/unmap churn
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, -1);
#endif
  CLI::App app{"sparse GNN training kernels: benchmarks, cost model, checks"};
  app.require_subcommand(1);

  CommonOpts bench_opts;
  CLI::App* bench = app.add_subcommand("bench", "time one configuration");
  add_common_options(bench, bench_opts);

  CommonOpts sweep_opts;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a configuration grid");
  add_common_options(sweep_cmd, sweep_opts);

  CLI::App* cost = app.add_subcommand("cost", "print the analytic cost model");
  count_t cost_n = 0, cost_q = 0, cost_p = 0, cost_f = 64;
  std::string cost_op = "both", cost_stats, cost_out = "-";
  cost->add_option("--n", cost_n, "nodes")->envname("SGNN_N");
  cost->add_option("--q", cost_q, "nonzeros")->envname("SGNN_Q");
  cost->add_option("--max-degree", cost_p, "ELLPACK width (max row nonzeros)")
      ->envname("SGNN_MAX_DEGREE");
  cost->add_option("--f", cost_f, "dense operand width")->envname("SGNN_F");
  cost->add_option("--op", cost_op, "spmm|sddmm|both")->envname("SGNN_OP");
  cost->add_option("--dataset-stats", cost_stats,
                   "use recorded statistics: cora|citeseer|pubmed|flickr|ogb-arxiv")
      ->envname("SGNN_DATASET_STATS");
  cost->add_option("--out", cost_out, "output path, '-' for stdout")->envname("SGNN_OUT");

  CommonOpts gc_opts;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gc_opts.dataset.clear();
  gc_opts.hidden = "5";
  gc_opts.in_features = 4;
  gc_opts.classes = 3;
  gc_opts.heads = 2;
  sgnn::index_t gc_n = 12;
  double gc_deg = 3.0, gc_eps = 0.0, gc_tol = 0.0;
  gradcheck->add_option("--dataset", gc_opts.dataset, "optional graph file or synth spec")
      ->envname("SGNN_DATASET");
  gradcheck->add_option("--model", gc_opts.model, "gcn2|gat2")->envname("SGNN_MODEL");
  gradcheck->add_option("--n", gc_n, "synthetic node count")->envname("SGNN_N");
  gradcheck->add_option("--avg-degree", gc_deg, "synthetic average degree")
      ->envname("SGNN_AVG_DEGREE");
  gradcheck->add_option("--hidden", gc_opts.hidden, "hidden size")->envname("SGNN_HIDDEN");
  gradcheck->add_option("--in-features", gc_opts.in_features, "input feature width")
      ->envname("SGNN_IN_FEATURES");
  gradcheck->add_option("--classes", gc_opts.classes, "output width")->envname("SGNN_CLASSES");
  gradcheck->add_option("--heads", gc_opts.heads, "attention heads (gat2)")
      ->envname("SGNN_HEADS");
  gradcheck->add_option("--scheme", gc_opts.scheme, "gcn2 scheme policy")
      ->envname("SGNN_SCHEME");
  gradcheck->add_option("--caching", gc_opts.caching, "caching level")->envname("SGNN_CACHING");
  gradcheck->add_option("--precision", gc_opts.precision, "f32|f64")->envname("SGNN_PRECISION");
  gradcheck->add_option("--eps", gc_eps, "probe step (default 1e-6 gcn2, 1e-5 gat2)")
      ->envname("SGNN_EPS");
  gradcheck->add_option("--tol", gc_tol, "pass threshold (default matches eps)")
      ->envname("SGNN_TOL");
  gradcheck->add_option("--seed", gc_opts.seed, "rng seed")->envname("SGNN_SEED");

  CLI::App* gen = app.add_subcommand("gen", "write a synthetic edge-list graph");
  sgnn::index_t gen_n = 1000;
  double gen_deg = 8.0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--n", gen_n, "nodes")->required()->envname("SGNN_N");
  gen->add_option("--avg-degree", gen_deg, "average degree")->required()
      ->envname("SGNN_AVG_DEGREE");
  gen->add_option("--seed", gen_seed, "rng seed")->envname("SGNN_SEED");
  gen->add_option("--out", gen_out, "output edge-list path")->required()->envname("SGNN_OUT");

  CLI11_PARSE(app, argc, argv);

  try {
    if (bench->parsed()) return run_bench(bench_opts, /*grid=*/false);
    if (sweep_cmd->parsed()) return run_bench(sweep_opts, /*grid=*/true);
    if (cost->parsed()) return run_cost(cost_n, cost_q, cost_p, cost_f, cost_op, cost_stats,
                                        cost_out);
    if (gradcheck->parsed()) {
      const bool gat = gc_opts.model == "gat2";
      const double eps = gc_eps > 0 ? gc_eps : (gat ? 1e-5 : 1e-6);
      const double tol = gc_tol > 0 ? gc_tol : (gat ? 1e-5 : 1e-6);
      if (gc_opts.precision == "f32")
        return gradcheck_impl<float>(gc_opts, gc_n, gc_deg, eps, tol);
      return gradcheck_impl<double>(gc_opts, gc_n, gc_deg, eps, tol);
    }
    if (gen->parsed()) {
      save_edge_list(synthetic_graph(gen_n, gen_deg, gen_seed), gen_out);
      std::cerr << "wrote " << gen_out << "\n";
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
