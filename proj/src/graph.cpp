#include "gproc/graph.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

namespace gproc {

namespace {

struct EdgeRec {
  VertexId u, v;
  uint32_t w;
};

Graph from_records(uint32_t vertex_count, std::vector<EdgeRec> recs,
                   bool directed, std::vector<uint64_t> labels) {
  if (!directed) {
    size_t n = recs.size();
    recs.reserve(2 * n);
    for (size_t i = 0; i < n; ++i)
      recs.push_back({recs[i].v, recs[i].u, recs[i].w});
  }
  Graph g;
  g.vertex_count = vertex_count;
  g.directed = directed;
  g.labels = std::move(labels);
  if (g.labels.empty()) {
    g.labels.resize(vertex_count);
    for (uint32_t i = 0; i < vertex_count; ++i) g.labels[i] = i;
  }
  // Counting sort by source keeps the per-source input order (stable).
  g.offsets.assign(vertex_count + 1, 0);
  for (const auto& r : recs) g.offsets[r.u + 1]++;
  for (uint32_t v = 0; v < vertex_count; ++v) g.offsets[v + 1] += g.offsets[v];
  g.targets.resize(recs.size());
  g.weights.resize(recs.size());
  std::vector<uint64_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (const auto& r : recs) {
    uint64_t slot = cursor[r.u]++;
    g.targets[slot] = r.v;
    g.weights[slot] = r.w;
  }
  return g;
}

}  // namespace

std::vector<Graph::Neighbor> Graph::neighbors(VertexId v) const {
  if (v >= vertex_count)
    throw DomainError("neighbors: vertex " + std::to_string(v) +
                      " out of range (V=" + std::to_string(vertex_count) + ")");
  std::vector<Neighbor> out;
  out.reserve(degree(v));
  for (uint64_t i = offsets[v]; i < offsets[v + 1]; ++i)
    out.push_back({targets[i], weights[i]});
  return out;
}

std::string GraphStats::display_avg_degree(int decimals) const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, avg_degree());
  return buf;
}

Graph parse_edge_list(std::istream& in, bool directed) {
  std::vector<EdgeRec> recs;
  std::map<uint64_t, VertexId> remap;  // first-appearance order via insertion below
  std::vector<uint64_t> labels;
  auto dense_id = [&](uint64_t label) -> VertexId {
    auto it = remap.find(label);
    if (it != remap.end()) return it->second;
    VertexId id = static_cast<VertexId>(labels.size());
    remap.emplace(label, id);
    labels.push_back(label);
    return id;
  };

  std::string line;
  uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#') continue;

    std::istringstream ls(line);
    long long tok[3];
    int ntok = 0;
    std::string word;
    bool malformed = false;
    while (ls >> word) {
      if (ntok >= 3) { malformed = true; break; }
      size_t used = 0;
      try {
        tok[ntok] = std::stoll(word, &used);
      } catch (const std::exception&) {
        malformed = true;
        break;
      }
      if (used != word.size()) { malformed = true; break; }
      ++ntok;
    }
    if (malformed || ntok < 2)
      throw ParseError("edge list line " + std::to_string(line_no) +
                       ": expected \"u v [w]\" integer tokens");
    if (tok[0] < 0 || tok[1] < 0)
      throw ParseError("edge list line " + std::to_string(line_no) +
                       ": negative vertex label");
    long long w = (ntok == 3) ? tok[2] : 1;
    if (w < 0)
      throw DomainError("edge list line " + std::to_string(line_no) +
                        ": negative weight");
    VertexId u = dense_id(static_cast<uint64_t>(tok[0]));
    VertexId v = dense_id(static_cast<uint64_t>(tok[1]));
    recs.push_back({u, v, static_cast<uint32_t>(w)});
  }
  return from_records(static_cast<uint32_t>(labels.size()), std::move(recs),
                      directed, std::move(labels));
}

Graph parse_edge_list_file(const std::string& path, bool directed) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open graph file: " + path);
  return parse_edge_list(in, directed);
}

void write_edge_list(const Graph& g, std::ostream& out) {
  std::vector<std::tuple<uint64_t, uint64_t, uint32_t>> lines;
  for (VertexId u = 0; u < g.vertex_count; ++u) {
    for (uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i) {
      VertexId v = g.targets[i];
      if (!g.directed) {
        // Emit each stored pair once; keep self-loops (two records -> one line).
        if (g.labels[u] > g.labels[v]) continue;
        if (u == v && (i - g.offsets[u]) % 2 == 1) continue;
      }
      lines.emplace_back(g.labels[u], g.labels[v], g.weights[i]);
    }
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& [u, v, w] : lines)
    out << u << ' ' << v << ' ' << w << '\n';
}

void write_edge_list_file(const Graph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: LF on every platform
  if (!out) throw ParseError("cannot open output file: " + path);
  write_edge_list(g, out);
}

Graph normalize(const Graph& g) {
  std::vector<EdgeRec> recs;
  recs.reserve(g.edge_records());
  for (VertexId u = 0; u < g.vertex_count; ++u) {
    std::map<VertexId, uint32_t> best;
    for (uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i) {
      VertexId v = g.targets[i];
      if (v == u) continue;  // self-loops dropped
      auto it = best.find(v);
      if (it == best.end() || g.weights[i] < it->second) best[v] = g.weights[i];
    }
    for (const auto& [v, w] : best) recs.push_back({u, v, w});
  }
  Graph out;
  out.vertex_count = g.vertex_count;
  out.directed = g.directed;
  out.labels = g.labels;
  out.offsets.assign(g.vertex_count + 1, 0);
  for (const auto& r : recs) out.offsets[r.u + 1]++;
  for (uint32_t v = 0; v < g.vertex_count; ++v) out.offsets[v + 1] += out.offsets[v];
  out.targets.resize(recs.size());
  out.weights.resize(recs.size());
  std::vector<uint64_t> cursor(out.offsets.begin(), out.offsets.end() - 1);
  for (const auto& r : recs) {  // map iteration: already ascending by target
    uint64_t slot = cursor[r.u]++;
    out.targets[slot] = r.v;
    out.weights[slot] = r.w;
  }
  return out;
}

GraphStats graph_stats(const Graph& g) {
  if (g.vertex_count == 0) throw DomainError("graph_stats: empty graph");
  GraphStats s;
  s.vertices = g.vertex_count;
  s.edges = g.logical_edges();
  return s;
}

Graph random_graph(uint32_t n, double p, uint32_t weight_lo, uint32_t weight_hi,
                   uint64_t seed, bool directed) {
  if (n < 1) throw DomainError("random_graph: n must be >= 1");
  if (p < 0.0 || p > 1.0) throw DomainError("random_graph: p out of [0,1]");
  if (weight_hi < weight_lo) throw DomainError("random_graph: bad weight range");
  SplitMix64 rng(seed);
  uint64_t span = static_cast<uint64_t>(weight_hi) - weight_lo + 1;
  std::vector<EdgeRec> recs;
  for (VertexId u = 0; u < n; ++u) {
    for (VertexId v = directed ? 0 : u + 1; v < n; ++v) {
      if (u == v) continue;
      if (rng.next_real() < p) {
        uint32_t w = weight_lo + static_cast<uint32_t>(rng.next_below(span));
        recs.push_back({u, v, w});
      }
    }
  }
  return from_records(n, std::move(recs), directed, {});
}

Graph build_graph(uint32_t vertex_count,
                  const std::vector<std::tuple<VertexId, VertexId, uint32_t>>& edges,
                  bool directed) {
  std::vector<EdgeRec> recs;
  recs.reserve(edges.size());
  for (const auto& [u, v, w] : edges) {
    if (u >= vertex_count || v >= vertex_count)
      throw DomainError("build_graph: endpoint out of range");
    recs.push_back({u, v, w});
  }
  return from_records(vertex_count, std::move(recs), directed, {});
}

}  // namespace gproc
