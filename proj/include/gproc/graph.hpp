#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gproc/errors.hpp"

namespace gproc {

using VertexId = uint32_t;

// Immutable after construction; safe for any number of concurrent readers.
struct Graph {
  uint32_t vertex_count = 0;
  bool directed = true;
  std::vector<uint64_t> offsets;   // length vertex_count + 1
  std::vector<VertexId> targets;   // length = stored edge records
  std::vector<uint32_t> weights;   // aligned with targets
  std::vector<uint64_t> labels;    // dense id -> original input label

  uint64_t edge_records() const { return targets.size(); }
  // Logical edges: stored records for directed graphs, stored/2 otherwise.
  uint64_t logical_edges() const {
    return directed ? edge_records() : edge_records() / 2;
  }
  uint64_t degree(VertexId v) const { return offsets[v + 1] - offsets[v]; }

  struct Neighbor {
    VertexId target;
    uint32_t weight;
  };
  std::vector<Neighbor> neighbors(VertexId v) const;
};

struct GraphStats {
  uint64_t vertices = 0;
  uint64_t edges = 0;  // logical
  // avg_degree held exactly as edges / vertices; no rounded value is stored.
  double avg_degree() const {
    return static_cast<double>(edges) / static_cast<double>(vertices);
  }
  std::string display_avg_degree(int decimals) const;
};

Graph parse_edge_list(std::istream& in, bool directed);
Graph parse_edge_list_file(const std::string& path, bool directed);

// Emits "u v w" lines (original labels), LF endings, sorted, no comments.
void write_edge_list(const Graph& g, std::ostream& out);
void write_edge_list_file(const Graph& g, const std::string& path);

// Deduplicates parallel edges (keeping minimum weight), drops self-loops,
// sorts adjacency by target id. Kernels and the compiler expect this form.
Graph normalize(const Graph& g);

GraphStats graph_stats(const Graph& g);

// Erdos-Renyi G(n,p) with integer weights uniform in [weight_lo, weight_hi].
// Deterministic for a fixed seed on every platform (splitmix64 driver).
Graph random_graph(uint32_t n, double p, uint32_t weight_lo, uint32_t weight_hi,
                   uint64_t seed, bool directed);

// Builds a graph from dense-id edge triples; used by tests and generators.
Graph build_graph(uint32_t vertex_count,
                  const std::vector<std::tuple<VertexId, VertexId, uint32_t>>& edges,
                  bool directed);

// splitmix64: the fixed PRNG used everywhere randomness is needed.
struct SplitMix64 {
  uint64_t state;
  explicit SplitMix64(uint64_t seed) : state(seed) {}
  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  // Uniform in [0, bound) via 128-bit multiply; bound > 0.
  uint64_t next_below(uint64_t bound) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next()) * bound) >> 64);
  }
  // Uniform real in [0, 1).
  double next_real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

}  // namespace gproc
