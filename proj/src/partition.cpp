#include "gproc/partition.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace gproc {

ComputationGraph extract_topology(const Graph& g) {
  ComputationGraph cg;
  cg.graph = &g;
  cg.work.resize(g.vertex_count);
  for (VertexId v = 0; v < g.vertex_count; ++v) cg.work[v] = g.degree(v) + 1;
  return cg;
}

uint64_t Partition::size_limit(uint64_t vertex_count) const {
  uint64_t base = (vertex_count + cluster_count - 1) / cluster_count;
  return static_cast<uint64_t>(
      static_cast<double>(base) * (1.0 + balance_epsilon) + 1e-9);
}

std::vector<uint64_t> Partition::cluster_sizes() const {
  std::vector<uint64_t> sizes(cluster_count, 0);
  for (uint32_t c : cluster_of) sizes[c]++;
  return sizes;
}

namespace {

// One coarsening level. Nodes carry the number of fine vertices they stand
// for; edge weights accumulate multiplicities of contracted edges.
struct Level {
  uint32_t count = 0;
  std::vector<std::map<uint32_t, uint64_t>> adj;
  std::vector<uint64_t> size;  // fine vertices represented
};

Level build_fine_level(const Graph& g) {
  Level lv;
  lv.count = g.vertex_count;
  lv.adj.resize(lv.count);
  lv.size.assign(lv.count, 1);
  for (VertexId u = 0; u < g.vertex_count; ++u)
    for (uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i) {
      VertexId v = g.targets[i];
      if (v == u) continue;
      lv.adj[u][v] += 1;  // undirected stores both directions already
      if (g.directed) lv.adj[v][u] += 1;
    }
  return lv;
}

// Heavy-edge matching; returns node -> coarse id, or empty when no pair
// matched (coarsening has converged).
std::vector<uint32_t> match_level(const Level& lv, uint64_t max_node_size) {
  std::vector<uint32_t> mate(lv.count, UINT32_MAX);
  bool any = false;
  for (uint32_t u = 0; u < lv.count; ++u) {
    if (mate[u] != UINT32_MAX) continue;
    uint64_t best_w = 0;
    uint32_t best_v = UINT32_MAX;
    for (const auto& [v, w] : lv.adj[u]) {
      if (mate[v] != UINT32_MAX || v == u) continue;
      if (lv.size[u] + lv.size[v] > max_node_size) continue;
      if (w > best_w || (w == best_w && v < best_v)) {
        best_w = w;
        best_v = v;
      }
    }
    if (best_v != UINT32_MAX) {
      mate[u] = best_v;
      mate[best_v] = u;
      any = true;
    }
  }
  if (!any) return {};
  std::vector<uint32_t> coarse_of(lv.count, UINT32_MAX);
  uint32_t next = 0;
  for (uint32_t u = 0; u < lv.count; ++u) {
    if (coarse_of[u] != UINT32_MAX) continue;
    coarse_of[u] = next;
    if (mate[u] != UINT32_MAX) coarse_of[mate[u]] = next;
    ++next;
  }
  return coarse_of;
}

Level contract(const Level& lv, const std::vector<uint32_t>& coarse_of) {
  Level out;
  out.count = *std::max_element(coarse_of.begin(), coarse_of.end()) + 1;
  out.adj.resize(out.count);
  out.size.assign(out.count, 0);
  for (uint32_t u = 0; u < lv.count; ++u) {
    out.size[coarse_of[u]] += lv.size[u];
    for (const auto& [v, w] : lv.adj[u]) {
      uint32_t cu = coarse_of[u], cv = coarse_of[v];
      if (cu != cv) out.adj[cu][cv] += w;
    }
  }
  return out;
}

// Greedy balanced growth of k seeds over the (possibly coarse) level.
std::vector<uint32_t> initial_assignment(const Level& lv, uint32_t k,
                                         uint64_t total_fine) {
  std::vector<uint32_t> part(lv.count, UINT32_MAX);
  uint32_t unassigned_nodes = lv.count;
  uint64_t unassigned_fine = total_fine;

  auto degree_of = [&](uint32_t u) { return lv.adj[u].size(); };
  auto pick_seed = [&]() {
    uint32_t best = UINT32_MAX;
    size_t best_deg = 0;
    for (uint32_t u = 0; u < lv.count; ++u) {
      if (part[u] != UINT32_MAX) continue;
      if (best == UINT32_MAX || degree_of(u) > best_deg) {
        best = u;
        best_deg = degree_of(u);
      }
    }
    return best;
  };

  for (uint32_t c = 0; c < k; ++c) {
    uint32_t remaining_clusters = k - c;
    uint64_t target =
        (unassigned_fine + remaining_clusters - 1) / remaining_clusters;
    uint64_t grown = 0;
    std::deque<uint32_t> queue;
    while (grown < target && unassigned_nodes > 0) {
      // Later clusters each still need at least one node.
      if (unassigned_nodes <= remaining_clusters - 1 && grown > 0) break;
      uint32_t u = UINT32_MAX;
      while (!queue.empty()) {
        uint32_t cand = queue.front();
        queue.pop_front();
        if (part[cand] == UINT32_MAX) {
          u = cand;
          break;
        }
      }
      if (u == UINT32_MAX) u = pick_seed();
      if (u == UINT32_MAX) break;
      part[u] = c;
      grown += lv.size[u];
      --unassigned_nodes;
      unassigned_fine -= lv.size[u];
      for (const auto& [v, w] : lv.adj[u])
        if (part[v] == UINT32_MAX) queue.push_back(v);
    }
  }

  // Disconnected leftovers: smallest cluster first.
  std::vector<uint64_t> fine_size(k, 0);
  for (uint32_t u = 0; u < lv.count; ++u)
    if (part[u] != UINT32_MAX) fine_size[part[u]] += lv.size[u];
  for (uint32_t u = 0; u < lv.count; ++u) {
    if (part[u] != UINT32_MAX) continue;
    uint32_t best = 0;
    for (uint32_t c = 1; c < k; ++c)
      if (fine_size[c] < fine_size[best]) best = c;
    part[u] = best;
    fine_size[best] += lv.size[u];
  }
  return part;
}

}  // namespace

Partition cluster(const ComputationGraph& cg, uint32_t k, double epsilon) {
  const Graph& g = *cg.graph;
  uint32_t n = g.vertex_count;
  if (k < 1 || k > n)
    throw DomainError("cluster: k=" + std::to_string(k) +
                      " outside [1, V=" + std::to_string(n) + "]");

  Partition p;
  p.cluster_count = k;
  p.balance_epsilon = epsilon;
  p.cluster_of.resize(n);

  if (k == n) {  // node-level granularity: identity mapping
    std::iota(p.cluster_of.begin(), p.cluster_of.end(), 0);
    return p;
  }
  if (k == 1) {
    std::fill(p.cluster_of.begin(), p.cluster_of.end(), 0);
    return p;
  }

  uint64_t limit = p.size_limit(n);

  // Coarsen until the level is small; refuse matches that would exceed half
  // the size bound so the initial assignment can stay feasible.
  uint64_t coarse_target = std::max<uint64_t>(2ull * k, 64);
  uint64_t max_node = std::max<uint64_t>(1, limit / 2);
  Level lv = build_fine_level(g);
  std::vector<std::vector<uint32_t>> maps;
  while (lv.count > coarse_target) {
    std::vector<uint32_t> coarse_of = match_level(lv, max_node);
    if (coarse_of.empty()) break;
    lv = contract(lv, coarse_of);
    maps.push_back(std::move(coarse_of));
  }

  std::vector<uint32_t> coarse_part = initial_assignment(lv, k, n);

  // Project through the coarsening maps.
  for (VertexId v = 0; v < n; ++v) {
    uint32_t node = v;
    for (const auto& m : maps) node = m[node];
    p.cluster_of[v] = coarse_part[node];
  }

  auto sizes = p.cluster_sizes();
  auto cluster_degree = [&](VertexId v, uint32_t c) {
    uint64_t d = 0;
    for (uint64_t i = g.offsets[v]; i < g.offsets[v + 1]; ++i)
      if (p.cluster_of[g.targets[i]] == c) ++d;
    return d;
  };

  // Balance repair: move vertices out of oversize clusters, cheapest cut
  // damage first.
  while (true) {
    uint32_t src = UINT32_MAX;
    for (uint32_t c = 0; c < k; ++c)
      if (sizes[c] > limit && (src == UINT32_MAX || sizes[c] > sizes[src]))
        src = c;
    if (src == UINT32_MAX) break;
    uint32_t dst = 0;
    for (uint32_t c = 1; c < k; ++c)
      if (sizes[c] < sizes[dst]) dst = c;
    VertexId best_v = UINT32_MAX;
    int64_t best_delta = 0;
    for (VertexId v = 0; v < n; ++v) {
      if (p.cluster_of[v] != src) continue;
      int64_t delta = static_cast<int64_t>(cluster_degree(v, src)) -
                      static_cast<int64_t>(cluster_degree(v, dst));
      if (best_v == UINT32_MAX || delta < best_delta) {
        best_v = v;
        best_delta = delta;
      }
    }
    p.cluster_of[best_v] = dst;
    sizes[src]--;
    sizes[dst]++;
  }

  // One boundary refinement pass: move a vertex when that strictly reduces
  // the cut without breaking balance or emptying its cluster.
  for (VertexId v = 0; v < n; ++v) {
    uint32_t src = p.cluster_of[v];
    if (sizes[src] <= 1) continue;
    std::map<uint32_t, uint64_t> link;
    for (uint64_t i = g.offsets[v]; i < g.offsets[v + 1]; ++i)
      link[p.cluster_of[g.targets[i]]]++;
    uint64_t internal = link.count(src) ? link[src] : 0;
    uint32_t best_dst = UINT32_MAX;
    int64_t best_gain = 0;
    for (const auto& [c, d] : link) {
      if (c == src || sizes[c] + 1 > limit) continue;
      int64_t gain = static_cast<int64_t>(d) - static_cast<int64_t>(internal);
      if (gain > best_gain) {
        best_gain = gain;
        best_dst = c;
      }
    }
    if (best_dst != UINT32_MAX) {
      p.cluster_of[v] = best_dst;
      sizes[src]--;
      sizes[best_dst]++;
    }
  }

  return p;
}

void validate_partition(const Graph& g, const Partition& p) {
  if (p.cluster_of.size() != g.vertex_count)
    throw DomainError("partition: wrong cluster_of length");
  if (p.cluster_count == 0) throw DomainError("partition: zero clusters");
  auto sizes = p.cluster_sizes();
  uint64_t limit = p.size_limit(g.vertex_count);
  for (uint32_t c : p.cluster_of)
    if (c >= p.cluster_count) throw DomainError("partition: cluster id out of range");
  for (uint32_t c = 0; c < p.cluster_count; ++c) {
    if (sizes[c] == 0)
      throw DomainError("partition: empty cluster " + std::to_string(c));
    if (sizes[c] > limit)
      throw DomainError("partition: cluster " + std::to_string(c) + " size " +
                        std::to_string(sizes[c]) + " exceeds limit " +
                        std::to_string(limit));
  }
}

uint64_t cut_edges(const Graph& g, const Partition& p) {
  uint64_t crossing = 0;
  for (VertexId u = 0; u < g.vertex_count; ++u)
    for (uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i)
      if (p.cluster_of[u] != p.cluster_of[g.targets[i]]) ++crossing;
  return g.directed ? crossing : crossing / 2;
}

uint64_t ClusterGraph::edge_weight(uint32_t a, uint32_t b) const {
  auto it = weight[a].find(b);
  return it == weight[a].end() ? 0 : it->second;
}

uint64_t ClusterGraph::total_weight(uint32_t c) const {
  uint64_t sum = 0;
  for (const auto& [other, w] : weight[c]) sum += w;
  return sum;
}

uint64_t ClusterGraph::cut_total() const {
  uint64_t sum = 0;
  for (uint32_t a = 0; a < cluster_count; ++a)
    for (const auto& [b, w] : weight[a])
      if (b > a) sum += w;
  return sum;
}

ClusterGraph cluster_dependency(const Graph& g, const Partition& p) {
  ClusterGraph cg;
  cg.cluster_count = p.cluster_count;
  cg.weight.resize(p.cluster_count);
  uint64_t intra = 0;
  for (VertexId u = 0; u < g.vertex_count; ++u)
    for (uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i) {
      uint32_t a = p.cluster_of[u], b = p.cluster_of[g.targets[i]];
      if (a == b) {
        ++intra;
        continue;
      }
      cg.weight[a][b] += 1;
      if (g.directed) cg.weight[b][a] += 1;
    }
  if (!g.directed) {  // both stored directions counted each crossing twice
    for (auto& row : cg.weight)
      for (auto& [b, w] : row) w /= 2;
    intra /= 2;
  }
  cg.intra_edges = intra;
  return cg;
}

Placement place(const ClusterGraph& cg, uint32_t rows, uint32_t cols) {
  uint64_t cells = static_cast<uint64_t>(rows) * cols;
  if (cg.cluster_count > cells)
    throw CapacityError("place: " + std::to_string(cg.cluster_count) +
                        " clusters exceed " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " array");

  std::vector<uint32_t> order(cg.cluster_count);
  std::iota(order.begin(), order.end(), 0);
  std::vector<uint64_t> tw(cg.cluster_count);
  for (uint32_t c = 0; c < cg.cluster_count; ++c) tw[c] = cg.total_weight(c);
  std::stable_sort(order.begin(), order.end(),
                   [&](uint32_t a, uint32_t b) { return tw[a] > tw[b]; });

  Placement pl;
  pl.rows = rows;
  pl.cols = cols;
  pl.coord_of.assign(cg.cluster_count, {0, 0});
  std::vector<bool> used(cells, false);
  std::vector<uint32_t> placed;

  for (uint32_t c : order) {
    uint64_t best_cost = UINT64_MAX;
    uint32_t best_cell = 0;
    for (uint32_t cell = 0; cell < cells; ++cell) {
      if (used[cell]) continue;
      uint32_t r = cell / cols, col = cell % cols;
      uint64_t cost = 0;
      for (uint32_t b : placed) {
        uint64_t w = cg.edge_weight(c, b);
        if (!w) continue;
        auto [br, bc] = pl.coord_of[b];
        uint64_t dist = (r > br ? r - br : br - r) + (col > bc ? col - bc : bc - col);
        cost += w * dist;
      }
      if (cost < best_cost) {  // strict: earliest row-major cell wins ties
        best_cost = cost;
        best_cell = cell;
      }
    }
    used[best_cell] = true;
    pl.coord_of[c] = {best_cell / cols, best_cell % cols};
    placed.push_back(c);
  }
  return pl;
}

uint64_t placement_cost(const ClusterGraph& cg, const Placement& pl) {
  uint64_t cost = 0;
  for (uint32_t a = 0; a < cg.cluster_count; ++a)
    for (const auto& [b, w] : cg.weight[a]) {
      if (b <= a) continue;
      auto [ar, ac] = pl.coord_of[a];
      auto [br, bc] = pl.coord_of[b];
      cost += w * ((ar > br ? ar - br : br - ar) + (ac > bc ? ac - bc : bc - ac));
    }
  return cost;
}

}  // namespace gproc
