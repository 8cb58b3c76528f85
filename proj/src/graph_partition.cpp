// Multilevel balanced graph partitioning of symmetrized k-NN graphs.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "shardann/partition.hpp"
#include "shardann/random.hpp"

namespace shardann {

namespace {

using Weight = std::int64_t;

// Undirected CSR graph with node and edge weights. An edge weight counts the
// directed k-NN arcs it stands for, so the weighted cut equals the arc cut.
struct WeightedGraph {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> targets;
  std::vector<Weight> edge_weights;
  std::vector<Weight> node_weights;

  [[nodiscard]] std::size_t size() const { return node_weights.size(); }
  [[nodiscard]] Weight total_weight() const {
    return std::accumulate(node_weights.begin(), node_weights.end(), Weight{0});
  }
};

struct Arc {
  std::uint32_t u;
  std::uint32_t v;
  Weight w;
};

WeightedGraph from_arcs(std::size_t n, std::vector<Arc>& arcs, std::vector<Weight> node_weights) {
  std::sort(arcs.begin(), arcs.end(), [](const Arc& a, const Arc& b) {
    return a.u < b.u || (a.u == b.u && a.v < b.v);
  });
  WeightedGraph g;
  g.node_weights = std::move(node_weights);
  g.offsets.assign(n + 1, 0);
  for (std::size_t i = 0; i < arcs.size();) {
    std::size_t j = i;
    Weight w = 0;
    while (j < arcs.size() && arcs[j].u == arcs[i].u && arcs[j].v == arcs[i].v) w += arcs[j++].w;
    g.targets.push_back(arcs[i].v);
    g.edge_weights.push_back(w);
    ++g.offsets[arcs[i].u + 1];
    i = j;
  }
  for (std::size_t u = 0; u < n; ++u) g.offsets[u + 1] += g.offsets[u];
  return g;
}

WeightedGraph symmetrize(const KnnGraph& graph) {
  std::vector<Arc> arcs;
  arcs.reserve(graph.num_edges() * 2);
  for (std::size_t u = 0; u < graph.size(); ++u) {
    for (PointId v : graph.neighbors(u)) {
      arcs.push_back({static_cast<std::uint32_t>(u), v, 1});
      arcs.push_back({v, static_cast<std::uint32_t>(u), 1});
    }
  }
  return from_arcs(graph.size(), arcs, std::vector<Weight>(graph.size(), 1));
}

Weight weighted_cut(const WeightedGraph& g, const std::vector<ShardId>& part) {
  Weight cut = 0;
  for (std::size_t u = 0; u < g.size(); ++u)
    for (std::size_t e = g.offsets[u]; e < g.offsets[u + 1]; ++e)
      if (part[u] != part[g.targets[e]]) cut += g.edge_weights[e];
  return cut / 2;
}

std::vector<std::uint32_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0U);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  return order;
}

// Size-constrained label propagation; returns a dense cluster id per node.
std::vector<std::uint32_t> label_propagation(const WeightedGraph& g, Weight max_cluster_weight,
                                             std::size_t rounds, Rng& rng) {
  const std::size_t n = g.size();
  std::vector<std::uint32_t> cluster(n);
  std::iota(cluster.begin(), cluster.end(), 0U);
  std::vector<Weight> cluster_weight(g.node_weights);
  std::vector<Weight> conn(n, 0);
  std::vector<std::uint32_t> touched;
  for (std::size_t round = 0; round < rounds; ++round) {
    std::size_t moves = 0;
    for (std::uint32_t u : shuffled(n, rng)) {
      const std::uint32_t own = cluster[u];
      touched.clear();
      for (std::size_t e = g.offsets[u]; e < g.offsets[u + 1]; ++e) {
        const std::uint32_t c = cluster[g.targets[e]];
        if (conn[c] == 0) touched.push_back(c);
        conn[c] += g.edge_weights[e];
      }
      std::uint32_t best = own;
      Weight best_conn = conn[own];
      for (std::uint32_t c : touched) {
        if (c == own) continue;
        if (cluster_weight[c] + g.node_weights[u] > max_cluster_weight) continue;
        if (conn[c] > best_conn || (conn[c] == best_conn && best != own && c < best)) {
          best = c;
          best_conn = conn[c];
        }
      }
      for (std::uint32_t c : touched) conn[c] = 0;
      if (best != own) {
        cluster_weight[own] -= g.node_weights[u];
        cluster_weight[best] += g.node_weights[u];
        cluster[u] = best;
        ++moves;
      }
    }
    if (moves == 0) break;
  }
  std::vector<std::uint32_t> dense(n, UINT32_MAX);
  std::uint32_t next = 0;
  for (std::size_t u = 0; u < n; ++u) {
    if (dense[cluster[u]] == UINT32_MAX) dense[cluster[u]] = next++;
    cluster[u] = dense[cluster[u]];
  }
  return cluster;
}

WeightedGraph contract(const WeightedGraph& g, const std::vector<std::uint32_t>& cluster, std::size_t clusters) {
  std::vector<Weight> weights(clusters, 0);
  for (std::size_t u = 0; u < g.size(); ++u) weights[cluster[u]] += g.node_weights[u];
  std::vector<Arc> arcs;
  arcs.reserve(g.targets.size());
  for (std::size_t u = 0; u < g.size(); ++u)
    for (std::size_t e = g.offsets[u]; e < g.offsets[u + 1]; ++e) {
      const std::uint32_t cu = cluster[u];
      const std::uint32_t cv = cluster[g.targets[e]];
      if (cu != cv) arcs.push_back({cu, cv, g.edge_weights[e]});
    }
  return from_arcs(clusters, arcs, std::move(weights));
}

// Greedy region growing: blocks are grown one after another from random
// seeds by absorbing the frontier node most connected to the block. The last
// block takes whatever remains.
std::vector<ShardId> grow_regions(const WeightedGraph& g, std::size_t s, Weight limit, Rng& rng) {
  const std::size_t n = g.size();
  constexpr ShardId kUnassigned = UINT32_MAX;
  std::vector<ShardId> part(n, kUnassigned);
  std::vector<Weight> conn(n, 0);
  std::vector<std::size_t> rejected(n, 0);  // block + 1 that refused the node
  Weight remaining = g.total_weight();
  const auto seed_order = shuffled(n, rng);
  std::vector<std::uint32_t> touched;
  for (std::size_t b = 0; b + 1 < s; ++b) {
    const double target = static_cast<double>(remaining) / static_cast<double>(s - b);
    Weight block_weight = 0;
    std::priority_queue<std::pair<Weight, std::int64_t>> frontier;  // (conn, -node)
    std::size_t seed_cursor = 0;
    touched.clear();
    while (static_cast<double>(block_weight) < target) {
      std::uint32_t u = UINT32_MAX;
      while (!frontier.empty()) {
        auto [c, neg] = frontier.top();
        frontier.pop();
        const auto cand = static_cast<std::uint32_t>(-neg);
        if (part[cand] == kUnassigned && rejected[cand] != b + 1 && conn[cand] == c) {
          u = cand;
          break;
        }
      }
      if (u == UINT32_MAX) {
        while (seed_cursor < n && (part[seed_order[seed_cursor]] != kUnassigned ||
                                   rejected[seed_order[seed_cursor]] == b + 1))
          ++seed_cursor;
        if (seed_cursor == n) break;
        u = seed_order[seed_cursor];
      }
      if (block_weight + g.node_weights[u] > limit) {
        rejected[u] = b + 1;
        continue;
      }
      part[u] = static_cast<ShardId>(b);
      block_weight += g.node_weights[u];
      for (std::size_t e = g.offsets[u]; e < g.offsets[u + 1]; ++e) {
        const std::uint32_t v = g.targets[e];
        if (part[v] != kUnassigned) continue;
        if (conn[v] == 0) touched.push_back(v);
        conn[v] += g.edge_weights[e];
        frontier.emplace(conn[v], -static_cast<std::int64_t>(v));
      }
    }
    for (std::uint32_t v : touched) conn[v] = 0;
    remaining -= block_weight;
  }
  for (auto& p : part)
    if (p == kUnassigned) p = static_cast<ShardId>(s - 1);
  return part;
}

// Boundary local search: a node moves to the adjacent block it is most
// connected to when the move does not increase the cut, and for zero-gain
// moves only when it strictly improves balance.
void refine(const WeightedGraph& g, std::vector<ShardId>& part, std::size_t s, Weight limit,
            std::size_t passes, bool check_moves, Rng& rng) {
  const std::size_t n = g.size();
  std::vector<Weight> block_weight(s, 0);
  for (std::size_t u = 0; u < n; ++u) block_weight[part[u]] += g.node_weights[u];
  std::vector<Weight> conn(s, 0);
  std::vector<ShardId> touched;
  Weight current_cut = check_moves ? weighted_cut(g, part) : 0;
  for (std::size_t pass = 0; pass < passes; ++pass) {
    std::size_t improving = 0;
    for (std::uint32_t u : shuffled(n, rng)) {
      const ShardId own = part[u];
      touched.clear();
      bool boundary = false;
      for (std::size_t e = g.offsets[u]; e < g.offsets[u + 1]; ++e) {
        const ShardId b = part[g.targets[e]];
        if (b != own) boundary = true;
        if (conn[b] == 0) touched.push_back(b);
        conn[b] += g.edge_weights[e];
      }
      if (boundary) {
        const Weight wu = g.node_weights[u];
        ShardId best = own;
        Weight best_gain = 0;
        bool best_balances = false;
        for (ShardId b : touched) {
          if (b == own || block_weight[b] + wu > limit) continue;
          const Weight gain = conn[b] - conn[own];
          if (gain < 0) continue;
          const bool balances = block_weight[b] + wu < block_weight[own];
          if (gain == 0 && !balances) continue;
          if (best == own || gain > best_gain || (gain == best_gain && balances && !best_balances) ||
              (gain == best_gain && balances == best_balances && b < best)) {
            best = b;
            best_gain = gain;
            best_balances = balances;
          }
        }
        if (best != own) {
          part[u] = best;
          block_weight[own] -= wu;
          block_weight[best] += wu;
          if (best_gain > 0) ++improving;
          if (check_moves) {
            const Weight after = weighted_cut(g, part);
            if (after > current_cut) throw std::logic_error("refinement move increased the cut");
            if (after != current_cut - best_gain) throw std::logic_error("refinement gain mismatch");
            current_cut = after;
          }
        }
      }
      for (ShardId b : touched) conn[b] = 0;
      conn[own] = 0;
    }
    if (improving == 0) break;
  }
}

}  // namespace

Partition partition_graph(const KnnGraph& graph, std::size_t s, double epsilon, std::uint64_t seed,
                          const GraphPartitionParams& params) {
  const std::size_t n = graph.size();
  if (n == 0) throw InputError("partition_graph: empty graph");
  if (s < 1 || s > n) throw InputError("partition_graph: need 1 <= s <= n");
  const auto limit = static_cast<Weight>(shard_size_limit(n, s, epsilon));
  if (s == 1) return Partition::disjoint(std::vector<ShardId>(n, 0), 1, epsilon);

  auto rng = make_rng(seed, {0x6770});
  std::vector<WeightedGraph> levels;
  std::vector<std::vector<std::uint32_t>> maps;
  levels.push_back(symmetrize(graph));

  const Weight max_cluster_weight =
      std::max<Weight>(1, static_cast<Weight>(epsilon * static_cast<double>(n) / static_cast<double>(s)));
  const std::size_t coarse_target = 20 * s;
  while (levels.back().size() > coarse_target && levels.size() < 64) {
    const WeightedGraph& fine = levels.back();
    auto cluster = label_propagation(fine, max_cluster_weight, params.label_propagation_rounds, rng);
    const std::size_t clusters = cluster.empty() ? 0 : *std::max_element(cluster.begin(), cluster.end()) + 1;
    if (static_cast<double>(clusters) > 0.95 * static_cast<double>(fine.size())) break;
    levels.push_back(contract(fine, cluster, clusters));
    maps.push_back(std::move(cluster));
  }

  const WeightedGraph& coarsest = levels.back();
  std::vector<ShardId> part;
  Weight best_cut = -1;
  for (std::size_t attempt = 0; attempt < std::max<std::size_t>(1, params.initial_tries); ++attempt) {
    auto candidate = grow_regions(coarsest, s, limit, rng);
    refine(coarsest, candidate, s, limit, params.refinement_passes, false, rng);
    const Weight cut = weighted_cut(coarsest, candidate);
    if (best_cut < 0 || cut < best_cut) {
      best_cut = cut;
      part = std::move(candidate);
    }
  }
  refine(coarsest, part, s, limit, params.refinement_passes, params.check_moves, rng);

  for (std::size_t level = levels.size() - 1; level > 0; --level) {
    const auto& map = maps[level - 1];
    std::vector<ShardId> finer(map.size());
    for (std::size_t u = 0; u < map.size(); ++u) finer[u] = part[map[u]];
    part = std::move(finer);
    refine(levels[level - 1], part, s, limit, params.refinement_passes, params.check_moves, rng);
  }

  // Region growing can overfill only the last block; spill to the lightest blocks.
  std::vector<std::size_t> sizes(s, 0);
  for (ShardId b : part) ++sizes[b];
  for (std::size_t u = 0; u < n; ++u) {
    if (sizes[part[u]] <= static_cast<std::size_t>(limit)) continue;
    const auto lightest = static_cast<ShardId>(std::min_element(sizes.begin(), sizes.end()) - sizes.begin());
    --sizes[part[u]];
    ++sizes[lightest];
    part[u] = lightest;
  }
  return Partition::disjoint(std::move(part), s, epsilon);
}

}  // namespace shardann
