#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shardann/core.hpp"

namespace shardann {

/// Directed graph with up to `degree_bound` out-neighbors per node.
class KnnGraph {
 public:
  KnnGraph() = default;
  KnnGraph(std::vector<std::vector<PointId>> adjacency, std::size_t degree_bound);

  [[nodiscard]] std::size_t size() const { return adjacency_.size(); }
  [[nodiscard]] std::size_t degree_bound() const { return degree_bound_; }
  [[nodiscard]] std::span<const PointId> neighbors(std::size_t u) const { return adjacency_[u]; }
  [[nodiscard]] std::size_t num_edges() const;
  [[nodiscard]] const std::vector<std::vector<PointId>>& adjacency() const { return adjacency_; }

  friend bool operator==(const KnnGraph&, const KnnGraph&) = default;

 private:
  std::vector<std::vector<PointId>> adjacency_;
  std::size_t degree_bound_ = 0;
};

struct BallCarvingParams {
  std::size_t repetitions = 3;
  std::size_t fanout = 3;
  std::size_t max_cluster_size = 2500;
  std::size_t top_level_pivots = 950;
  double pivot_fraction = 0.005;
  std::uint64_t seed = 0;

  void validate() const;
};

KnnGraph build_exact_knn(const Dataset& data, std::size_t k);

/// Approximate k-NN graph by recursive splitting around sampled pivots.
/// Clusters at or below max_cluster_size are resolved all-pairs; neighbor
/// candidates from every repetition are merged per node.
KnnGraph build_approx_knn(const Dataset& data, std::size_t k, const BallCarvingParams& params);

double graph_recall(const KnnGraph& approx, const KnnGraph& exact);

/// Bounded best-k candidate list for one node, deduplicated by id.
class NeighborAccumulator {
 public:
  explicit NeighborAccumulator(std::size_t k = 0) : k_(k) {}

  void insert(Neighbor candidate);
  void merge(const NeighborAccumulator& other);
  [[nodiscard]] const std::vector<Neighbor>& sorted() const { return best_; }

 private:
  std::size_t k_;
  std::vector<Neighbor> best_;  // ascending by (distance, id)
};

}  // namespace shardann
