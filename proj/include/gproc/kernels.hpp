#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gproc/graph.hpp"

namespace gproc {

enum class KernelKind : uint8_t { kSssp, kBfs, kDfs, kPagerank, kMiniTri, kCc };

const char* kernel_name(KernelKind k);
KernelKind kernel_from_name(const std::string& name);

// Sentinel in oracle outputs for unreachable / undiscovered vertices.
constexpr uint32_t kUnreached = 0xFFFFFFFFu;

struct KernelSpec {
  KernelKind kind = KernelKind::kBfs;
  VertexId source = 0;        // sssp / bfs / dfs
  double damping = 0.85;      // pagerank
  uint32_t iterations = 100;  // pagerank

  bool per_vertex_output() const { return kind != KernelKind::kMiniTri; }
};

// Validated construction; source checked against the graph it will run on.
KernelSpec kernel_spec(KernelKind kind, VertexId source, double damping,
                       uint32_t iterations, uint32_t vertex_count);

// Reference algorithms. These are the test oracles and the basis of the
// sequential baseline; they never share code with the compiled path.
std::vector<uint32_t> oracle_sssp(const Graph& g, VertexId source);
std::vector<uint32_t> oracle_bfs(const Graph& g, VertexId source);
std::vector<uint32_t> oracle_dfs(const Graph& g, VertexId source);
std::vector<double> oracle_pagerank(const Graph& g, double damping,
                                    uint32_t iterations);
std::vector<uint32_t> oracle_cc(const Graph& g);
uint64_t oracle_minitri(const Graph& g);

}  // namespace gproc
