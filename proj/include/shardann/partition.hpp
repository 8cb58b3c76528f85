#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "shardann/core.hpp"
#include "shardann/knn_graph.hpp"

namespace shardann {

/// floor((1 + epsilon) * n / divisor), never below ceil(n / divisor).
std::size_t shard_size_limit(std::size_t n, std::size_t divisor, double epsilon);

/// Node to shard assignment. Each node holds a sorted, non-empty list of
/// shard ids; all lists are singletons for a disjoint partition.
class Partition {
 public:
  Partition() = default;

  /// Disjoint partition; size limit divisor defaults to the shard count.
  static Partition disjoint(std::vector<ShardId> labels, std::size_t num_shards, double epsilon,
                            std::size_t size_divisor = 0);
  static Partition overlapping(std::vector<std::vector<ShardId>> lists, std::size_t num_shards,
                               double epsilon, std::size_t size_divisor);

  [[nodiscard]] std::size_t size() const { return lists_.size(); }
  [[nodiscard]] std::size_t num_shards() const { return num_shards_; }
  [[nodiscard]] double epsilon() const { return epsilon_; }
  /// Divisor used for the size limit: the shard count for disjoint
  /// partitions, the final target shard count for grown overlaps.
  [[nodiscard]] std::size_t size_divisor() const { return size_divisor_; }
  [[nodiscard]] std::size_t size_limit() const { return shard_size_limit(size(), size_divisor_, epsilon_); }
  [[nodiscard]] bool is_disjoint() const;
  [[nodiscard]] std::span<const ShardId> shards_of(std::size_t u) const { return lists_[u]; }
  /// Only valid for disjoint partitions.
  [[nodiscard]] ShardId shard_of(std::size_t u) const { return lists_[u].front(); }
  [[nodiscard]] bool contains(std::size_t u, ShardId shard) const;
  [[nodiscard]] std::vector<std::size_t> shard_sizes() const;
  /// Members of each shard, ascending by point id.
  [[nodiscard]] std::vector<std::vector<PointId>> shard_members() const;
  /// Total shard volume divided by n.
  [[nodiscard]] double overlap_factor() const;

  /// Adds `shard` to node u's list; returns false if already present.
  bool add(std::size_t u, ShardId shard);

  /// Equality compares shard count and assignment lists.
  friend bool operator==(const Partition& a, const Partition& b) {
    return a.num_shards_ == b.num_shards_ && a.lists_ == b.lists_;
  }

 private:
  void validate() const;

  std::vector<std::vector<ShardId>> lists_;
  std::size_t num_shards_ = 0;
  double epsilon_ = 0.0;
  std::size_t size_divisor_ = 0;
};

/// k-means centers of a center-based partition.
struct Centroids {
  RowMatrixF centers;
  std::vector<std::size_t> counts;
  std::vector<float> mean_norms;
};

struct GraphPartitionParams {
  std::size_t label_propagation_rounds = 5;
  std::size_t refinement_passes = 10;
  std::size_t initial_tries = 4;
  /// When set, FM moves are checked to never increase the cut.
  bool check_moves = false;
};

/// Balanced partition of the undirected k-NN graph minimizing cut arcs:
/// label-propagation coarsening, greedy region growing, then boundary
/// refinement on every level.
Partition partition_graph(const KnnGraph& graph, std::size_t s, double epsilon, std::uint64_t seed,
                          const GraphPartitionParams& params = {});

struct CenterPartition {
  Partition partition;
  Centroids centroids;
};

/// Lloyd's k-means (20 rounds) followed by remigration of the points
/// farthest from overloaded centers.
CenterPartition kmeans_partition(const Dataset& data, std::size_t s, double epsilon, std::uint64_t seed);

struct BalancedKMeansParams {
  std::size_t sub_rounds = 1000;
  std::size_t max_rounds = 200;
  std::size_t init_rounds = 20;
};

struct BalancedKMeansResult {
  CenterPartition result;
  std::size_t penalized_rounds = 0;
  bool forced_finish = false;
};

/// Penalized Lloyd assignment with an automatically tuned size penalty.
BalancedKMeansResult balanced_kmeans_partition(const Dataset& data, std::size_t s, double epsilon,
                                               std::uint64_t seed, const BalancedKMeansParams& params = {});

/// Nearest-center router over the aggregated sample of a pyramid partition.
class PyramidRouter {
 public:
  PyramidRouter() = default;
  PyramidRouter(RowMatrixF centers, std::vector<ShardId> labels, std::size_t num_shards, MetricTag metric);

  [[nodiscard]] const RowMatrixF& centers() const { return centers_; }
  [[nodiscard]] const std::vector<ShardId>& labels() const { return labels_; }
  [[nodiscard]] std::size_t num_shards() const { return num_shards_; }
  [[nodiscard]] MetricTag metric() const { return metric_; }

  /// Shards among the `nearest` closest centers ordered by their best center
  /// distance; the rest follow in ascending id with infinite score.
  [[nodiscard]] std::vector<std::pair<ShardId, double>> route(const Eigen::Ref<const Eigen::RowVectorXf>& q,
                                                              std::size_t nearest) const;

 private:
  RowMatrixF centers_;
  std::vector<ShardId> labels_;
  std::size_t num_shards_ = 0;
  MetricTag metric_ = MetricTag::L2;
};

struct PyramidParams {
  std::size_t sample_size = 10000;
  /// Points drawn before aggregation, as a multiple of sample_size.
  std::size_t subsample_factor = 4;
  std::size_t kmeans_rounds = 10;
  std::size_t graph_degree = 10;
};

struct PyramidResult {
  Partition partition;
  PyramidRouter router;
};

PyramidResult pyramid_partition(const Dataset& data, std::size_t s, double epsilon, std::uint64_t seed,
                                const PyramidParams& params = {});

/// Directed arcs (u, v) whose endpoints share no shard.
std::size_t cut_edges(const KnnGraph& graph, const Partition& p);

/// max shard size * size_divisor / n - 1.
double max_imbalance(const Partition& p);

/// Moves the points farthest from their center out of shards above `limit`
/// to the nearest center with spare capacity.
void remigrate_overloaded(const RowMatrixF& points, const RowMatrixF& centers, MetricTag metric,
                          std::size_t limit, std::vector<ShardId>& labels);

}  // namespace shardann
