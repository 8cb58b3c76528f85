#pragma once

#include <cstdint>
#include <functional>

#include "shardann/core.hpp"
#include "shardann/knn_graph.hpp"
#include "shardann/partition.hpp"

namespace shardann {

/// Replication budget: `target_shards` is the final shard count s whose size
/// limit floor((1+eps)n/s) every grown shard must respect; the disjoint input
/// is partitioned into round(overlap * s) shards.
struct OverlapParams {
  double overlap = 1.2;
  std::size_t target_shards = 0;
  double epsilon = 0.05;

  [[nodiscard]] std::size_t pre_overlap_shards() const;
  [[nodiscard]] std::size_t final_limit(std::size_t n) const;
  void validate(std::size_t n) const;
};

struct Placement {
  PointId node = 0;
  ShardId shard = 0;
  std::size_t gain = 0;
};

struct OverlapStats {
  std::size_t rounds = 0;
  std::size_t placements = 0;
  std::size_t stale = 0;
  std::size_t initial_cut = 0;
  std::size_t final_cut = 0;
};

/// Called after every applied placement with the partition it produced.
using PlacementObserver = std::function<void(const Placement&, const Partition&)>;

/// Replicates nodes into the shard covering the most of their cut arcs,
/// in bulk-synchronous rounds of equal gain, until no placement into a shard
/// below the final size limit removes a cut arc.
Partition overlap_graph_partition(const KnnGraph& graph, const Partition& disjoint, const OverlapParams& params,
                                  OverlapStats* stats = nullptr, const PlacementObserver& observer = {});

/// Number of uncovered arcs between u and members of `shard`, i.e. the drop
/// in cut_edges if u were replicated into it.
std::size_t placement_gain(const KnnGraph& graph, const std::vector<std::vector<PointId>>& reverse,
                           const Partition& p, PointId u, ShardId shard);

/// In-neighbor lists of a directed graph.
std::vector<std::vector<PointId>> reverse_adjacency(const KnnGraph& graph);

/// Replicates points into the shards of their 2nd, 3rd, ... closest centers,
/// lowest distance ratio first, until (o - 1) * n extra copies are placed or
/// no shard has capacity left.
Partition overlap_by_centers(const Dataset& data, const Partition& disjoint, const Centroids& centers,
                             const OverlapParams& params);

/// Full overlapping graph pipeline: disjoint partition into round(o * s)
/// shards at the tighter limit, then growth to the final limit.
Partition overlapping_graph_partition(const KnnGraph& graph, const OverlapParams& params, std::uint64_t seed,
                                      OverlapStats* stats = nullptr);

}  // namespace shardann
