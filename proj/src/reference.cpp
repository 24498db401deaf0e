#include "gproc/reference.hpp"

#include <algorithm>
#include <queue>

namespace gproc {

namespace {

struct Charger {
  const MachineConfig& cfg;
  Metrics m;
  uint64_t touches = 0;

  explicit Charger(const MachineConfig& c) : cfg(c) { m.busy.assign(1, 0); }

  void op(Opcode o, uint64_t n = 1) {
    m.op_counts[static_cast<int>(o)] += n;
    uint64_t lat = cfg.latency.of(o) * n;
    m.makespan += lat;
    m.busy[0] += lat;
    m.events += n;
  }
  // A non-sequential vertex-state access; every batch_words of them costs
  // one memory batch.
  void touch(uint64_t n = 1) {
    uint64_t before = touches / cfg.memory.batch_words;
    touches += n;
    uint64_t after = touches / cfg.memory.batch_words;
    if (after > before) {
      uint64_t batches = after - before;
      m.mem_batches += batches;
      m.makespan += batches * cfg.memory.batch_latency;
    }
  }
};

uint64_t log2_ceil(uint64_t n) {
  uint64_t l = 0;
  while ((1ull << l) < n) ++l;
  return l;
}

void ref_bfs(Charger& ch, const Graph& g, VertexId source) {
  ch.touch(g.vertex_count);
  ch.op(Opcode::kLdi, g.vertex_count);  // level array init
  ch.op(Opcode::kLdi);                  // source level
  ch.op(Opcode::kPushi);                // enqueue source
  std::vector<uint32_t> level(g.vertex_count, kUnreached);
  level[source] = 0;
  std::queue<VertexId> q;
  q.push(source);
  while (!q.empty()) {
    VertexId u = q.front();
    q.pop();
    ch.op(Opcode::kPopi);
    ch.touch();
    for (uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i) {
      VertexId w = g.targets[i];
      ch.op(Opcode::kCmp3);
      ch.touch();
      if (level[w] == kUnreached) {
        level[w] = level[u] + 1;
        q.push(w);
        ch.op(Opcode::kAdd);
        ch.op(Opcode::kMov);
        ch.op(Opcode::kPushi);
        ch.touch();
      }
    }
  }
}

void ref_sssp(Charger& ch, const Graph& g, VertexId source) {
  ch.touch(g.vertex_count);
  ch.op(Opcode::kLdi, g.vertex_count);
  std::vector<uint64_t> dist(g.vertex_count, UINT64_MAX);
  dist[source] = 0;
  using Item = std::pair<uint64_t, VertexId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  pq.push({0, source});
  ch.op(Opcode::kPushi);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    ch.op(Opcode::kPopi);
    ch.op(Opcode::kCmp3, log2_ceil(pq.size() + 2));  // heap sift
    ch.touch();
    if (d > dist[u]) continue;
    for (uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i) {
      ch.op(Opcode::kAdd);
      ch.op(Opcode::kCmp3);
      ch.touch();
      uint64_t nd = d + g.weights[i];
      if (nd < dist[g.targets[i]]) {
        dist[g.targets[i]] = nd;
        pq.push({nd, g.targets[i]});
        ch.op(Opcode::kMov);
        ch.op(Opcode::kPushi);
        ch.op(Opcode::kCmp3, log2_ceil(pq.size() + 1));
        ch.touch();
      }
    }
  }
}

void ref_dfs(Charger& ch, const Graph& g, VertexId source) {
  ch.touch(g.vertex_count);
  ch.op(Opcode::kLdi, g.vertex_count);
  std::vector<uint32_t> order(g.vertex_count, kUnreached);
  std::vector<std::vector<VertexId>> sorted(g.vertex_count);
  std::vector<std::pair<VertexId, size_t>> stack;
  uint32_t counter = 0;
  auto discover = [&](VertexId v) {
    order[v] = counter++;
    ch.op(Opcode::kLdi);
    ch.op(Opcode::kPushi);
    ch.touch();
    sorted[v].assign(g.targets.begin() + g.offsets[v],
                     g.targets.begin() + g.offsets[v + 1]);
    std::sort(sorted[v].begin(), sorted[v].end());
    stack.push_back({v, 0});
  };
  discover(source);
  while (!stack.empty()) {
    auto& [v, pos] = stack.back();
    if (pos == sorted[v].size()) {
      stack.pop_back();
      ch.op(Opcode::kPopi);
      continue;
    }
    VertexId w = sorted[v][pos++];
    ch.op(Opcode::kCmp3);
    ch.touch();
    if (order[w] == kUnreached) discover(w);
  }
}

void ref_pagerank(Charger& ch, const Graph& g, double damping,
                  uint32_t iterations) {
  (void)damping;
  ch.touch(g.vertex_count);
  ch.op(Opcode::kLdi, g.vertex_count);
  for (uint32_t it = 0; it < iterations; ++it) {
    for (VertexId u = 0; u < g.vertex_count; ++u) {
      ch.op(Opcode::kMac);  // rank * (d/deg)
      ch.touch();
      uint64_t deg = g.degree(u);
      uint64_t targets = deg == 0 ? g.vertex_count : deg;
      ch.op(Opcode::kAdd, targets);  // accumulate into each target
      ch.touch(targets);
    }
    ch.op(Opcode::kAdd, g.vertex_count);  // base term + swap
    ch.touch(g.vertex_count);
  }
}

void ref_cc(Charger& ch, const Graph& g) {
  ch.touch(g.vertex_count);
  ch.op(Opcode::kLdi, g.vertex_count);
  std::vector<VertexId> parent(g.vertex_count);
  for (VertexId v = 0; v < g.vertex_count; ++v) parent[v] = v;
  auto find = [&](VertexId x) {
    while (parent[x] != x) {
      ch.op(Opcode::kCmp3);
      ch.touch();
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    ch.op(Opcode::kCmp3);
    ch.touch();
    return x;
  };
  for (VertexId u = 0; u < g.vertex_count; ++u)
    for (uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i) {
      VertexId a = find(u), b = find(g.targets[i]);
      if (a != b) {
        parent[std::max(a, b)] = std::min(a, b);
        ch.op(Opcode::kMov);
        ch.touch();
      }
    }
  for (VertexId v = 0; v < g.vertex_count; ++v) {
    find(v);
    ch.op(Opcode::kMov);
    ch.touch();
  }
}

void ref_minitri(Charger& ch, const Graph& g) {
  // Rank-ordered pair probes with a binary search per candidate.
  for (VertexId u = 0; u < g.vertex_count; ++u) {
    ch.touch();
    std::vector<VertexId> nb(g.targets.begin() + g.offsets[u],
                             g.targets.begin() + g.offsets[u + 1]);
    std::sort(nb.begin(), nb.end());
    for (size_t i = 0; i < nb.size(); ++i) {
      if (nb[i] <= u) continue;
      for (size_t j = i + 1; j < nb.size(); ++j) {
        uint64_t deg_v = g.degree(nb[i]);
        ch.op(Opcode::kCmp3, log2_ceil(deg_v + 2));
        ch.touch();
        ch.op(Opcode::kAdd);  // count update path
      }
    }
  }
}

}  // namespace

Metrics reference_model(const KernelSpec& kernel, const Graph& g,
                        const MachineConfig& cfg) {
  Charger ch(cfg);
  switch (kernel.kind) {
    case KernelKind::kSssp:
      ref_sssp(ch, g, kernel.source);
      break;
    case KernelKind::kBfs:
      ref_bfs(ch, g, kernel.source);
      break;
    case KernelKind::kDfs:
      ref_dfs(ch, g, kernel.source);
      break;
    case KernelKind::kPagerank:
      ref_pagerank(ch, g, kernel.damping, kernel.iterations);
      break;
    case KernelKind::kCc:
      ref_cc(ch, g);
      break;
    case KernelKind::kMiniTri:
      ref_minitri(ch, g);
      break;
  }
  return ch.m;
}

}  // namespace gproc
