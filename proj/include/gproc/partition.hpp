#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "gproc/graph.hpp"

namespace gproc {

// Communication topology handed to the clustering stage. For the vertex-
// centric kernels this is the data graph plus a per-vertex work weight of
// degree+1; the profiling step is static.
struct ComputationGraph {
  const Graph* graph = nullptr;
  std::vector<uint64_t> work;  // length V
};

ComputationGraph extract_topology(const Graph& g);

struct Partition {
  std::vector<uint32_t> cluster_of;  // length V
  uint32_t cluster_count = 0;
  double balance_epsilon = 0.0;

  // Hard size bound: ceil(V/k) * (1 + epsilon), in vertices.
  uint64_t size_limit(uint64_t vertex_count) const;
  std::vector<uint64_t> cluster_sizes() const;
};

// Multilevel clustering: heavy-edge matching down to max(2k, 64) nodes,
// greedy balanced seed growth for the initial assignment, a fine-level
// balance repair, then one boundary refinement pass. Deterministic; ties
// break toward the lowest vertex id.
Partition cluster(const ComputationGraph& cg, uint32_t k, double epsilon);

// Throws DomainError when an invariant is violated; used by tests.
void validate_partition(const Graph& g, const Partition& p);

// Number of logical edges with endpoints in different clusters.
uint64_t cut_edges(const Graph& g, const Partition& p);

struct ClusterGraph {
  uint32_t cluster_count = 0;
  std::vector<std::map<uint32_t, uint64_t>> weight;  // symmetric adjacency
  uint64_t intra_edges = 0;

  uint64_t edge_weight(uint32_t a, uint32_t b) const;
  uint64_t total_weight(uint32_t c) const;
  uint64_t cut_total() const;  // sum over unordered pairs
};

ClusterGraph cluster_dependency(const Graph& g, const Partition& p);

struct Placement {
  std::vector<std::pair<uint32_t, uint32_t>> coord_of;  // cluster -> (row, col)
  uint32_t rows = 0;
  uint32_t cols = 0;
};

// Greedy cost-ordered placement on an R x C array; ties resolve in row-major
// scan order.
Placement place(const ClusterGraph& cg, uint32_t rows, uint32_t cols);

uint64_t placement_cost(const ClusterGraph& cg, const Placement& pl);

}  // namespace gproc
