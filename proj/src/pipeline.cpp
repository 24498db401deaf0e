#include "gproc/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

namespace gproc {

using nlohmann::json;

namespace {

uint32_t pick_k(const std::string& mode, uint32_t requested, uint32_t v) {
  if (mode == "node") return v;
  if (requested == 0) return std::max<uint32_t>(1, (v + 3) / 4);
  return requested;
}

void pick_dims(uint32_t k, uint32_t& rows, uint32_t& cols) {
  if (rows && cols) return;
  uint32_t side = 1;
  while (side * side < k) ++side;
  rows = side;
  cols = side;
}

std::string fmt_double(double v, int prec = 8) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

}  // namespace

PipelineResult run_pipeline(const KernelSpec& spec, const Graph& normalized,
                            MappingMode mode, uint32_t k, uint32_t rows,
                            uint32_t cols, double epsilon,
                            const MachineConfig& cfg) {
  if (static_cast<uint64_t>(rows) * cols < k)
    throw CapacityError("array " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " cannot hold " +
                        std::to_string(k) + " clusters");
  ComputationGraph cg = extract_topology(normalized);
  Partition part = cluster(cg, k, epsilon);
  ClusterGraph dep = cluster_dependency(normalized, part);
  Placement pl = place(dep, rows, cols);
  CompiledApp app = codegen(spec, normalized, part, pl, mode);

  MachineConfig mc = cfg;
  mc.rows = rows;
  mc.cols = cols;
  Machine machine(mc);
  machine.load(app);
  RunOutput out = machine.run();
  return {std::move(out), std::move(app)};
}

std::string metrics_csv_header() {
  std::ostringstream os;
  os << "kernel,graph,mode,k,dims,makespan,energy,words_moved,mem_batches";
  for (int i = 0; i < kOpcodeCount; ++i)
    os << ",n_" << opcode_name(static_cast<Opcode>(i));
  os << ",speedup,status";
  return os.str();
}

std::string metrics_csv_row(const std::string& kernel, const std::string& graph,
                            const std::string& mode, uint32_t k, uint32_t rows,
                            uint32_t cols, const Metrics& m, double energy,
                            std::optional<double> speedup,
                            const std::string& status) {
  std::ostringstream os;
  os << kernel << "," << graph << "," << mode << "," << k << "," << rows << "x"
     << cols << "," << m.makespan << "," << fmt_double(energy, 4) << ","
     << m.words_moved << "," << m.mem_batches;
  for (int i = 0; i < kOpcodeCount; ++i) os << "," << m.op_counts[i];
  os << "," << (speedup ? fmt_double(*speedup, 4) : std::string("")) << ","
     << status;
  return os.str();
}

std::string results_csv(const KernelSpec& spec, const RunOutput& out,
                        const std::vector<uint64_t>& labels) {
  std::ostringstream os;
  if (spec.kind == KernelKind::kMiniTri) {
    os << "metric,value\n";
    os << "triangles," << out.scalar << "\n";
    return os.str();
  }
  os << "vertex,value\n";
  // rows ordered by original file label
  std::vector<std::pair<uint64_t, uint32_t>> rows;
  rows.reserve(labels.size());
  for (uint32_t v = 0; v < labels.size(); ++v) rows.push_back({labels[v], v});
  std::sort(rows.begin(), rows.end());
  for (auto [label, v] : rows) {
    os << label << ",";
    if (spec.kind == KernelKind::kPagerank)
      os << fmt_double(static_cast<double>(out.values[v]) / 65536.0);
    else
      os << out.values[v];
    os << "\n";
  }
  return os.str();
}

RunArtifacts run_command(const RunConfig& rc) {
  Graph raw = rc.gen ? random_graph(rc.gen->n, rc.gen->p, rc.weight_lo,
                                    rc.weight_hi, rc.gen->seed, rc.directed)
                     : parse_edge_list_file(rc.graph_path, rc.directed);
  Graph g = normalize(raw);
  KernelKind kind = kernel_from_name(rc.kernel);
  KernelSpec spec = kernel_spec(kind, rc.source, rc.damping, rc.iterations,
                                g.vertex_count);
  MappingMode mode = mapping_mode_from_name(rc.mode);
  uint32_t k = pick_k(rc.mode, rc.k, g.vertex_count);
  uint32_t rows = rc.rows, cols = rc.cols;
  pick_dims(k, rows, cols);

  MachineConfig cfg = resolve_machine_config(rc.machine_config);
  if (rc.budget) cfg.event_budget = rc.budget;

  RunArtifacts art;
  PipelineResult pr = run_pipeline(spec, g, mode, k, rows, cols, rc.epsilon, cfg);
  art.output = std::move(pr.output);
  art.app = std::move(pr.app);
  art.labels = g.labels;
  art.reference = reference_model(spec, g, cfg);
  art.energy = estimate_energy(art.output.metrics, cfg.energy);

  namespace fs = std::filesystem;
  fs::create_directories(rc.out_dir);
  art.results_path = rc.out_dir + "/results.csv";
  art.metrics_path = rc.out_dir + "/metrics.csv";
  {
    std::ofstream rf(art.results_path, std::ios::binary);
    rf << results_csv(spec, art.output, art.labels);
  }
  {
    std::ofstream mf(art.metrics_path, std::ios::binary);
    std::string gname = rc.gen ? ("gen_n" + std::to_string(rc.gen->n) + "_s" +
                                  std::to_string(rc.gen->seed))
                               : rc.graph_path;
    double speedup = static_cast<double>(art.reference.makespan) /
                     static_cast<double>(art.output.metrics.makespan);
    mf << metrics_csv_header() << "\n";
    mf << metrics_csv_row(rc.kernel, gname, rc.mode, k, rows, cols,
                          art.output.metrics, art.energy, speedup, "ok")
       << "\n";
    mf << metrics_csv_row(rc.kernel, gname, "reference", 1, 1, 1, art.reference,
                          estimate_energy(art.reference, cfg.energy),
                          std::nullopt, "ok")
       << "\n";
  }
  return art;
}

// ---------------------------------------------------------------------------
// bench

BenchConfig bench_config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open bench config: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bench config: ") + e.what());
  }
  BenchConfig bc;
  try {
    bc.kernels = j.at("kernels").get<std::vector<std::string>>();
    for (const auto& gj : j.at("graphs")) {
      BenchConfig::GraphSpec gs;
      if (gj.contains("path")) {
        gs.path = gj["path"].get<std::string>();
        gs.name = gs.path;
      } else {
        GenSpec gen;
        gen.n = gj.at("n").get<uint32_t>();
        gen.p = gj.at("p").get<double>();
        gen.seed = gj.at("seed").get<uint64_t>();
        gs.gen = gen;
        gs.name = "gen_n" + std::to_string(gen.n) + "_p" +
                  fmt_double(gen.p, 2) + "_s" + std::to_string(gen.seed);
      }
      bc.graphs.push_back(gs);
    }
    for (const auto& mj : j.at("modes")) {
      BenchConfig::ModeSpec ms;
      ms.mode = mj.at("mode").get<std::string>();
      if (mj.contains("k")) ms.k = mj["k"].get<uint32_t>();
      bc.modes.push_back(ms);
    }
    if (j.contains("dims")) {
      bc.rows = j["dims"].at("rows").get<uint32_t>();
      bc.cols = j["dims"].at("cols").get<uint32_t>();
    }
    if (j.contains("source")) bc.source = j["source"].get<uint32_t>();
    if (j.contains("damping")) bc.damping = j["damping"].get<double>();
    if (j.contains("iterations"))
      bc.iterations = j["iterations"].get<uint32_t>();
    if (j.contains("machine_config"))
      bc.machine_config = j["machine_config"].get<std::string>();
    if (j.contains("out")) bc.out_path = j["out"].get<std::string>();
    if (j.contains("parallel")) bc.parallel = j["parallel"].get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bench config: ") + e.what());
  }
  return bc;
}

void bench_command(const BenchConfig& bc) {
  MachineConfig cfg = resolve_machine_config(bc.machine_config);

  struct Cell {
    std::string kernel, graph_name, mode;
    uint32_t k;
  };
  std::vector<Cell> cells;
  std::vector<Graph> graphs;
  for (const auto& gs : bc.graphs)
    graphs.push_back(normalize(
        gs.gen ? random_graph(gs.gen->n, gs.gen->p, 1, 10, gs.gen->seed, false)
               : parse_edge_list_file(gs.path, false)));

  for (const auto& kn : bc.kernels)
    for (size_t gi = 0; gi < bc.graphs.size(); ++gi)
      for (const auto& ms : bc.modes)
        cells.push_back({kn, bc.graphs[gi].name, ms.mode, ms.k});

  auto run_cell = [&](size_t idx) -> std::vector<std::string> {
    const Cell& cell = cells[idx];
    const Graph& g = graphs[(idx / bc.modes.size()) % bc.graphs.size()];
    std::vector<std::string> rows_out;
    try {
      KernelSpec spec =
          kernel_spec(kernel_from_name(cell.kernel), bc.source, bc.damping,
                      bc.iterations, g.vertex_count);
      uint32_t k = pick_k(cell.mode, cell.k, g.vertex_count);
      uint32_t rows = bc.rows, cols = bc.cols;
      pick_dims(k, rows, cols);
      PipelineResult pr =
          run_pipeline(spec, g, mapping_mode_from_name(cell.mode), k, rows,
                       cols, 0.0, cfg);
      Metrics ref = reference_model(spec, g, cfg);
      double speedup = static_cast<double>(ref.makespan) /
                       static_cast<double>(pr.output.metrics.makespan);
      rows_out.push_back(metrics_csv_row(
          cell.kernel, cell.graph_name, cell.mode, k, rows, cols,
          pr.output.metrics, estimate_energy(pr.output.metrics, cfg.energy),
          speedup, "ok"));
      rows_out.push_back(metrics_csv_row(cell.kernel, cell.graph_name,
                                         "reference", 1, 1, 1, ref,
                                         estimate_energy(ref, cfg.energy),
                                         std::nullopt, "ok"));
    } catch (const std::exception& e) {
      Metrics empty;
      empty.busy.assign(1, 0);
      std::string what = e.what();
      for (auto& ch : what)
        if (ch == ',' || ch == '\n') ch = ';';
      rows_out.push_back(metrics_csv_row(cell.kernel, cell.graph_name,
                                         cell.mode, cell.k, 0, 0, empty, 0.0,
                                         std::nullopt, "error: " + what));
    }
    return rows_out;
  };

  std::vector<std::vector<std::string>> results(cells.size());
  if (bc.parallel) {
    std::vector<std::future<std::vector<std::string>>> futs;
    futs.reserve(cells.size());
    for (size_t i = 0; i < cells.size(); ++i)
      futs.push_back(std::async(std::launch::async, run_cell, i));
    for (size_t i = 0; i < cells.size(); ++i) results[i] = futs[i].get();
  } else {
    for (size_t i = 0; i < cells.size(); ++i) results[i] = run_cell(i);
  }

  std::ofstream out(bc.out_path, std::ios::binary);
  if (!out) throw ConfigError("cannot open bench output: " + bc.out_path);
  out << metrics_csv_header() << "\n";
  for (const auto& rows_out : results)  // matrix order, not completion order
    for (const auto& row : rows_out) out << row << "\n";
}

// ---------------------------------------------------------------------------

void stats_command(const std::string& graph_path, bool directed,
                   std::string& out_text) {
  Graph g = parse_edge_list_file(graph_path, directed);
  GraphStats s = graph_stats(g);
  std::ostringstream os;
  os << "vertices " << s.vertices << "\n";
  os << "edges " << s.edges << "\n";
  os << "avg_degree " << fmt_double(s.avg_degree(), 6) << "\n";
  os << "avg_degree_2dp " << s.display_avg_degree(2) << "\n";
  os << "avg_degree_1dp " << s.display_avg_degree(1) << "\n";
  out_text = os.str();
}

void gen_command(uint32_t n, double p, uint64_t seed, uint32_t weight_lo,
                 uint32_t weight_hi, bool directed, const std::string& out_path) {
  Graph g = random_graph(n, p, weight_lo, weight_hi, seed, directed);
  write_edge_list_file(g, out_path);
}

// ---------------------------------------------------------------------------
// CLI

int cli_main(int argc, char** argv) {
  CLI::App app{"gproc: asynchronous graph-processor array model"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "compile and simulate one kernel");
  RunConfig rc;
  std::string gen_spec;
  run->add_option("--kernel", rc.kernel, "sssp|bfs|dfs|pr|minitri|cc")
      ->required();
  run->add_option("--graph", rc.graph_path, "edge-list file");
  run->add_option("--gen", gen_spec, "n,p,seed random graph");
  run->add_flag("--directed", rc.directed, "treat edges as directed");
  run->add_option("--source", rc.source, "source vertex (sssp/bfs/dfs)");
  run->add_option("--damping", rc.damping, "pagerank damping");
  run->add_option("--iters", rc.iterations, "pagerank iterations");
  run->add_option("--mode", rc.mode, "node|cluster");
  run->add_option("--k", rc.k, "cluster count (cluster mode)");
  std::string dims;
  run->add_option("--dims", dims, "RxC array size");
  run->add_option("--machine-config", rc.machine_config, "machine JSON");
  run->add_option("--out", rc.out_dir, "output directory");
  run->add_option("--budget", rc.budget, "event budget override");
  run->add_option("--epsilon", rc.epsilon, "partition balance tolerance");
  uint64_t run_seed = 0;
  run->add_option("--seed", run_seed, "seed for --gen (overrides third field)");

  // bench
  auto* bench = app.add_subcommand("bench", "kernel x graph x mode sweep");
  std::string bench_cfg_path;
  bench->add_option("config", bench_cfg_path, "bench config JSON")->required();

  // stats
  auto* stats = app.add_subcommand("stats", "print graph statistics");
  std::string stats_path;
  bool stats_directed = false;
  stats->add_option("graph", stats_path, "edge-list file")->required();
  stats->add_flag("--directed", stats_directed, "treat edges as directed");

  // gen
  auto* gen = app.add_subcommand("gen", "write a random edge list");
  uint32_t gn = 16;
  double gp = 0.25;
  uint64_t gseed = 1;
  uint32_t glo = 1, ghi = 10;
  bool gdirected = false;
  std::string gout = "graph.txt";
  gen->add_option("--n", gn, "vertices")->required();
  gen->add_option("--p", gp, "edge probability")->required();
  gen->add_option("--seed", gseed, "prng seed");
  gen->add_option("--wlo", glo, "min weight");
  gen->add_option("--whi", ghi, "max weight");
  gen->add_flag("--directed", gdirected, "directed output");
  gen->add_option("--out", gout, "output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) {
      if (!gen_spec.empty()) {
        GenSpec gs;
        if (std::sscanf(gen_spec.c_str(), "%u,%lf,%llu", &gs.n, &gs.p,
                        reinterpret_cast<unsigned long long*>(&gs.seed)) < 2)
          throw ConfigError("--gen expects n,p,seed");
        if (run_seed) gs.seed = run_seed;
        rc.gen = gs;
      } else if (rc.graph_path.empty()) {
        throw ConfigError("run needs --graph or --gen");
      }
      if (!dims.empty()) {
        if (std::sscanf(dims.c_str(), "%ux%u", &rc.rows, &rc.cols) != 2)
          throw ConfigError("--dims expects RxC");
      }
      RunArtifacts art = run_command(rc);
      std::printf("makespan %llu energy %s words %llu\n",
                  static_cast<unsigned long long>(art.output.metrics.makespan),
                  fmt_double(art.energy, 4).c_str(),
                  static_cast<unsigned long long>(art.output.metrics.words_moved));
      std::printf("results %s\nmetrics %s\n", art.results_path.c_str(),
                  art.metrics_path.c_str());
      if (art.app.kernel.kind == KernelKind::kMiniTri)
        std::printf("triangles %llu\n",
                    static_cast<unsigned long long>(art.output.scalar));
    } else if (bench->parsed()) {
      bench_command(bench_config_from_file(bench_cfg_path));
    } else if (stats->parsed()) {
      std::string text;
      stats_command(stats_path, stats_directed, text);
      std::fputs(text.c_str(), stdout);
    } else if (gen->parsed()) {
      gen_command(gn, gp, gseed, glo, ghi, gdirected, gout);
    }
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 2;
  } catch (const TimeoutError& e) {
    std::fprintf(stderr, "timeout: %s\n", e.what());
    return 5;
  } catch (const FaultError& e) {
    std::fprintf(stderr, "fault: %s\n", e.what());
    return 6;
  } catch (const CapacityError& e) {
    std::fprintf(stderr, "capacity error: %s\n", e.what());
    return 4;
  } catch (const CompileError& e) {
    std::fprintf(stderr, "compile error: %s\n", e.what());
    return 3;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 7;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "domain error: %s\n", e.what());
    return 8;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace gproc
