#include "shardann/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shardann {

std::size_t OverlapParams::pre_overlap_shards() const {
  return static_cast<std::size_t>(std::llround(overlap * static_cast<double>(target_shards)));
}

std::size_t OverlapParams::final_limit(std::size_t n) const {
  return shard_size_limit(n, target_shards, epsilon);
}

void OverlapParams::validate(std::size_t n) const {
  if (!(overlap >= 1.0)) throw InputError("overlap: factor must be >= 1");
  if (target_shards == 0) throw InputError("overlap: target shard count must be positive");
  if (pre_overlap_shards() > n) throw InputError("overlap: more shards than points");
}

namespace {

bool share_shard(std::span<const ShardId> a, std::span<const ShardId> b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

void check_disjoint_input(const Partition& p, const OverlapParams& params) {
  if (!p.is_disjoint()) throw InputError("overlap: input partition must be disjoint");
  if (p.num_shards() != params.pre_overlap_shards())
    throw InputError("overlap: input must have round(o * s) shards");
}

Partition grown_copy(const Partition& p, const OverlapParams& params) {
  std::vector<std::vector<ShardId>> lists(p.size());
  for (std::size_t u = 0; u < p.size(); ++u) lists[u].assign(p.shards_of(u).begin(), p.shards_of(u).end());
  return Partition::overlapping(std::move(lists), p.num_shards(), params.epsilon, params.target_shards);
}

}  // namespace

std::vector<std::vector<PointId>> reverse_adjacency(const KnnGraph& graph) {
  std::vector<std::vector<PointId>> reverse(graph.size());
  for (std::size_t u = 0; u < graph.size(); ++u)
    for (PointId v : graph.neighbors(u)) reverse[v].push_back(static_cast<PointId>(u));
  return reverse;
}

std::size_t placement_gain(const KnnGraph& graph, const std::vector<std::vector<PointId>>& reverse,
                           const Partition& p, PointId u, ShardId shard) {
  if (p.contains(u, shard)) return 0;
  const auto su = p.shards_of(u);
  std::size_t gain = 0;
  auto count = [&](PointId v) {
    const auto sv = p.shards_of(v);
    if (!share_shard(su, sv) && std::binary_search(sv.begin(), sv.end(), shard)) ++gain;
  };
  for (PointId v : graph.neighbors(u)) count(v);
  for (PointId v : reverse[u]) count(v);
  return gain;
}

Partition overlap_graph_partition(const KnnGraph& graph, const Partition& disjoint, const OverlapParams& params,
                                  OverlapStats* stats, const PlacementObserver& observer) {
  const std::size_t n = graph.size();
  if (disjoint.size() != n) throw InputError("overlap: graph/partition size mismatch");
  params.validate(n);
  check_disjoint_input(disjoint, params);
  const std::size_t tight = shard_size_limit(n, disjoint.num_shards(), params.epsilon);
  auto sizes = disjoint.shard_sizes();
  for (std::size_t size : sizes)
    if (size > tight) throw InputError("overlap: input shards exceed the pre-overlap size limit");

  const std::size_t limit = params.final_limit(n);
  const std::size_t shards = disjoint.num_shards();
  Partition p = grown_copy(disjoint, params);
  const auto reverse = reverse_adjacency(graph);

  OverlapStats local;
  local.initial_cut = cut_edges(graph, p);
  std::size_t cut = local.initial_cut;

  std::vector<std::size_t> counts(shards, 0);
  std::vector<ShardId> touched;
  std::vector<Placement> best(n);
  while (cut > 0) {
    std::size_t top_gain = 0;
    for (std::size_t u = 0; u < n; ++u) {
      best[u] = {static_cast<PointId>(u), 0, 0};
      const auto su = p.shards_of(u);
      touched.clear();
      auto visit = [&](PointId v) {
        const auto sv = p.shards_of(v);
        if (share_shard(su, sv)) return;
        for (ShardId s : sv) {
          if (counts[s] == 0) touched.push_back(s);
          ++counts[s];
        }
      };
      for (PointId v : graph.neighbors(u)) visit(v);
      for (PointId v : reverse[u]) visit(v);
      for (ShardId s : touched) {
        if (sizes[s] < limit &&
            (counts[s] > best[u].gain || (counts[s] == best[u].gain && counts[s] > 0 && s < best[u].shard)))
          best[u] = {static_cast<PointId>(u), s, counts[s]};
        counts[s] = 0;
      }
      top_gain = std::max(top_gain, best[u].gain);
    }
    if (top_gain == 0) break;
    ++local.rounds;
    for (std::size_t u = 0; u < n; ++u) {
      const Placement& pick = best[u];
      if (pick.gain != top_gain) continue;
      // Gains selected at the round start may be stale; such nodes wait for the next round.
      if (sizes[pick.shard] >= limit ||
          placement_gain(graph, reverse, p, pick.node, pick.shard) != pick.gain) {
        ++local.stale;
        continue;
      }
      p.add(pick.node, pick.shard);
      ++sizes[pick.shard];
      cut -= pick.gain;
      ++local.placements;
      if (observer) observer(pick, p);
    }
  }
  local.final_cut = cut;
  if (stats) *stats = local;
  return p;
}

Partition overlap_by_centers(const Dataset& data, const Partition& disjoint, const Centroids& centers,
                             const OverlapParams& params) {
  const std::size_t n = data.size();
  if (disjoint.size() != n) throw InputError("overlap_by_centers: dataset/partition size mismatch");
  params.validate(n);
  check_disjoint_input(disjoint, params);
  const auto num_centers = static_cast<std::size_t>(centers.centers.rows());
  if (num_centers != disjoint.num_shards() || static_cast<std::size_t>(centers.centers.cols()) != data.dim())
    throw InputError("overlap_by_centers: centers do not match the partition");

  Partition p = grown_copy(disjoint, params);
  const std::size_t limit = params.final_limit(n);
  const auto budget = static_cast<std::size_t>(std::floor((params.overlap - 1.0) * static_cast<double>(n) + 1e-9));
  if (budget == 0 || num_centers < 2) return p;

  const MetricTag ratio_metric =
      data.metric() == MetricTag::L2 || data.metric() == MetricTag::Hamming ? MetricTag::L2 : MetricTag::Angular;
  // Center order per point, closest first.
  std::vector<std::vector<Neighbor>> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = order[i];
    row.resize(num_centers);
    for (std::size_t c = 0; c < num_centers; ++c)
      row[c] = {distance(ratio_metric, data.row(i), centers.centers.row(static_cast<Eigen::Index>(c))),
                static_cast<PointId>(c)};
    std::sort(row.begin(), row.end());
  }

  auto sizes = p.shard_sizes();
  std::size_t placed = 0;
  std::vector<std::pair<double, std::size_t>> queue(n);
  for (std::size_t j = 1; j < num_centers && placed < budget; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double nearest = order[i][0].distance;
      const double other = order[i][j].distance;
      double ratio = std::numeric_limits<double>::infinity();
      if (nearest > 0.0) ratio = other / nearest;
      else if (other == 0.0) ratio = 1.0;
      queue[i] = {ratio, i};
    }
    std::sort(queue.begin(), queue.end());
    for (const auto& [ratio, i] : queue) {
      const ShardId shard = order[i][j].id;
      if (sizes[shard] >= limit || p.contains(i, shard)) continue;
      p.add(i, shard);
      ++sizes[shard];
      if (++placed >= budget) break;
    }
    if (std::all_of(sizes.begin(), sizes.end(), [&](std::size_t s) { return s >= limit; })) break;
  }
  return p;
}

Partition overlapping_graph_partition(const KnnGraph& graph, const OverlapParams& params, std::uint64_t seed,
                                      OverlapStats* stats) {
  params.validate(graph.size());
  const Partition disjoint = partition_graph(graph, params.pre_overlap_shards(), params.epsilon, seed);
  return overlap_graph_partition(graph, disjoint, params, stats);
}

}  // namespace shardann
