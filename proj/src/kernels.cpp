#include "gproc/kernels.hpp"

#include <algorithm>
#include <queue>
#include <set>

namespace gproc {

namespace {
const char* const kKernelNames[] = {"sssp", "bfs", "dfs", "pr", "minitri", "cc"};
}

const char* kernel_name(KernelKind k) {
  return kKernelNames[static_cast<int>(k)];
}

KernelKind kernel_from_name(const std::string& name) {
  for (int i = 0; i < 6; ++i)
    if (name == kKernelNames[i]) return static_cast<KernelKind>(i);
  throw ConfigError("unknown kernel '" + name +
                    "' (expected sssp|bfs|dfs|pr|minitri|cc)");
}

KernelSpec kernel_spec(KernelKind kind, VertexId source, double damping,
                       uint32_t iterations, uint32_t vertex_count) {
  KernelSpec s{kind, source, damping, iterations};
  bool needs_source = kind == KernelKind::kSssp || kind == KernelKind::kBfs ||
                      kind == KernelKind::kDfs;
  if (needs_source && source >= vertex_count)
    throw DomainError("kernel source vertex " + std::to_string(source) +
                      " out of range (V=" + std::to_string(vertex_count) + ")");
  if (kind == KernelKind::kPagerank) {
    if (!(damping > 0.0 && damping < 1.0))
      throw DomainError("pagerank damping must lie in (0,1)");
    if (iterations < 1) throw DomainError("pagerank needs >= 1 iteration");
  }
  return s;
}

std::vector<uint32_t> oracle_sssp(const Graph& g, VertexId source) {
  if (source >= g.vertex_count) throw DomainError("sssp: source out of range");
  std::vector<uint64_t> dist(g.vertex_count, UINT64_MAX);
  dist[source] = 0;
  using Item = std::pair<uint64_t, VertexId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  pq.push({0, source});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i) {
      uint64_t nd = d + g.weights[i];
      if (nd < dist[g.targets[i]]) {
        dist[g.targets[i]] = nd;
        pq.push({nd, g.targets[i]});
      }
    }
  }
  std::vector<uint32_t> out(g.vertex_count);
  for (VertexId v = 0; v < g.vertex_count; ++v)
    out[v] = dist[v] == UINT64_MAX ? kUnreached : static_cast<uint32_t>(dist[v]);
  return out;
}

std::vector<uint32_t> oracle_bfs(const Graph& g, VertexId source) {
  if (source >= g.vertex_count) throw DomainError("bfs: source out of range");
  std::vector<uint32_t> level(g.vertex_count, kUnreached);
  level[source] = 0;
  std::queue<VertexId> q;
  q.push(source);
  while (!q.empty()) {
    VertexId u = q.front();
    q.pop();
    for (uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i) {
      VertexId v = g.targets[i];
      if (level[v] == kUnreached) {
        level[v] = level[u] + 1;
        q.push(v);
      }
    }
  }
  return level;
}

std::vector<uint32_t> oracle_dfs(const Graph& g, VertexId source) {
  if (source >= g.vertex_count) throw DomainError("dfs: source out of range");
  std::vector<uint32_t> order(g.vertex_count, kUnreached);
  uint32_t counter = 0;
  // Explicit stack of (vertex, sorted neighbor list position); visitation is
  // by ascending vertex id.
  std::vector<std::vector<VertexId>> sorted(g.vertex_count);
  std::vector<std::pair<VertexId, size_t>> stack;
  auto discover = [&](VertexId v) {
    order[v] = counter++;
    sorted[v].clear();
    for (uint64_t i = g.offsets[v]; i < g.offsets[v + 1]; ++i)
      sorted[v].push_back(g.targets[i]);
    std::sort(sorted[v].begin(), sorted[v].end());
    stack.push_back({v, 0});
  };
  discover(source);
  while (!stack.empty()) {
    auto& [v, pos] = stack.back();
    if (pos == sorted[v].size()) {
      stack.pop_back();
      continue;
    }
    VertexId w = sorted[v][pos++];
    if (order[w] == kUnreached) discover(w);
  }
  return order;
}

std::vector<double> oracle_pagerank(const Graph& g, double damping,
                                    uint32_t iterations) {
  if (!(damping > 0.0 && damping < 1.0))
    throw DomainError("pagerank damping must lie in (0,1)");
  if (iterations < 1) throw DomainError("pagerank needs >= 1 iteration");
  uint32_t n = g.vertex_count;
  std::vector<double> rank(n, 1.0 / n), next(n);
  for (uint32_t it = 0; it < iterations; ++it) {
    double dangling = 0.0;
    for (VertexId v = 0; v < n; ++v)
      if (g.degree(v) == 0) dangling += rank[v];
    double base = (1.0 - damping) / n + damping * dangling / n;
    std::fill(next.begin(), next.end(), base);
    for (VertexId u = 0; u < n; ++u) {
      uint64_t deg = g.degree(u);
      if (deg == 0) continue;
      double share = damping * rank[u] / static_cast<double>(deg);
      for (uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i)
        next[g.targets[i]] += share;
    }
    rank.swap(next);
  }
  return rank;
}

namespace {
struct DisjointSet {
  std::vector<VertexId> parent;
  explicit DisjointSet(uint32_t n) : parent(n) {
    for (uint32_t i = 0; i < n; ++i) parent[i] = i;
  }
  VertexId find(VertexId x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(VertexId a, VertexId b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};
}  // namespace

std::vector<uint32_t> oracle_cc(const Graph& g) {
  DisjointSet ds(g.vertex_count);
  for (VertexId u = 0; u < g.vertex_count; ++u)
    for (uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i)
      ds.unite(u, g.targets[i]);  // edge direction ignored
  std::vector<uint32_t> min_label(g.vertex_count, kUnreached);
  for (VertexId v = 0; v < g.vertex_count; ++v) {
    VertexId r = ds.find(v);
    min_label[r] = std::min(min_label[r], v);
  }
  std::vector<uint32_t> out(g.vertex_count);
  for (VertexId v = 0; v < g.vertex_count; ++v) out[v] = min_label[ds.find(v)];
  return out;
}

uint64_t oracle_minitri(const Graph& g) {
  // Brute-force triple enumeration over an adjacency set; the graph is
  // expected to be simple and undirected (normalized).
  std::set<std::pair<VertexId, VertexId>> adj;
  for (VertexId u = 0; u < g.vertex_count; ++u)
    for (uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i)
      adj.insert({u, g.targets[i]});
  auto connected = [&](VertexId a, VertexId b) {
    return adj.count({a, b}) || adj.count({b, a});
  };
  uint64_t total = 0;
  for (VertexId u = 0; u < g.vertex_count; ++u)
    for (VertexId v = u + 1; v < g.vertex_count; ++v) {
      if (!connected(u, v)) continue;
      for (VertexId w = v + 1; w < g.vertex_count; ++w)
        if (connected(u, w) && connected(v, w)) ++total;
    }
  return total;
}

}  // namespace gproc
