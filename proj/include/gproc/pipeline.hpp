#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gproc/codegen.hpp"
#include "gproc/config.hpp"
#include "gproc/machine.hpp"
#include "gproc/reference.hpp"

namespace gproc {

struct GenSpec {
  uint32_t n = 16;
  double p = 0.25;
  uint64_t seed = 1;
};

struct RunConfig {
  std::string kernel = "bfs";
  VertexId source = 0;
  double damping = 0.85;
  uint32_t iterations = 100;

  std::string graph_path;           // or:
  std::optional<GenSpec> gen;
  bool directed = false;

  std::string mode = "cluster";
  uint32_t k = 0;  // 0: default ceil(V/4); forced to V for node mode
  uint32_t rows = 0, cols = 0;  // 0: smallest square that fits k
  double epsilon = 0.0;

  std::string machine_config;  // path; empty resolves GPROC_CONFIG/defaults
  std::string out_dir = ".";
  uint64_t budget = 0;  // 0: config default
  uint32_t weight_lo = 1, weight_hi = 10;
};

struct RunArtifacts {
  RunOutput output;
  Metrics reference;
  double energy = 0.0;
  std::string results_path;
  std::string metrics_path;
  CompiledApp app;         // for inspection in tests
  std::vector<uint64_t> labels;  // dense id -> file label
};

// The full pipeline: parse/generate -> normalize -> extract -> cluster ->
// dependency -> place -> codegen -> load -> run -> gather. Writes
// results.csv and metrics.csv under out_dir.
RunArtifacts run_command(const RunConfig& rc);

// In-memory core used by run_command and the acceptance suite.
struct PipelineResult {
  RunOutput output;
  CompiledApp app;
};
PipelineResult run_pipeline(const KernelSpec& spec, const Graph& normalized,
                            MappingMode mode, uint32_t k, uint32_t rows,
                            uint32_t cols, double epsilon,
                            const MachineConfig& cfg);

std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& kernel, const std::string& graph,
                            const std::string& mode, uint32_t k, uint32_t rows,
                            uint32_t cols, const Metrics& m, double energy,
                            std::optional<double> speedup,
                            const std::string& status);
std::string results_csv(const KernelSpec& spec, const RunOutput& out,
                        const std::vector<uint64_t>& labels);

struct BenchConfig {
  std::vector<std::string> kernels;
  struct GraphSpec {
    std::string path;  // or gen
    std::optional<GenSpec> gen;
    std::string name;
  };
  std::vector<GraphSpec> graphs;
  struct ModeSpec {
    std::string mode;
    uint32_t k = 0;
  };
  std::vector<ModeSpec> modes;
  uint32_t rows = 0, cols = 0;
  VertexId source = 0;
  double damping = 0.85;
  uint32_t iterations = 20;
  std::string machine_config;
  std::string out_path = "bench.csv";
  bool parallel = true;
};

BenchConfig bench_config_from_file(const std::string& path);
// One row per (kernel, graph, mode) simulation plus one reference row; a
// failing cell becomes an error row and the sweep continues.
void bench_command(const BenchConfig& bc);

void stats_command(const std::string& graph_path, bool directed,
                   std::string& out_text);
void gen_command(uint32_t n, double p, uint64_t seed, uint32_t weight_lo,
                 uint32_t weight_hi, bool directed, const std::string& out_path);

// Maps exceptions to the documented exit codes.
int cli_main(int argc, char** argv);

}  // namespace gproc
