#pragma once

#include <vector>

#include "shardann/core.hpp"
#include "shardann/random.hpp"

namespace shardann {

struct KMeansResult {
  RowMatrixF centers;
  std::vector<ShardId> labels;
  std::vector<float> center_distances;  // distance of each point to its assigned center
};

/// Metric used for center assignment. Hamming points are clustered with
/// real-valued centers under L2.
MetricTag kmeans_metric(MetricTag metric);

/// True when centroids are rescaled to their cluster's mean norm after each
/// update (spherical k-means for inner product and angular data).
bool uses_spherical_update(MetricTag metric);

/// Nearest-center assignment, ties to the lower center id.
void assign_to_centers(const RowMatrixF& points, const RowMatrixF& centers, MetricTag metric,
                       std::vector<ShardId>& labels, std::vector<float>& center_distances);

/// Lloyd's algorithm with centers initialized from distinct sampled points.
/// Empty clusters are reseeded with the point farthest from its center.
KMeansResult lloyd_kmeans(const RowMatrixF& points, std::size_t clusters, std::size_t rounds,
                          MetricTag metric, Rng& rng);

/// Recomputes centers as cluster means (rescaled when spherical). Clusters
/// with no members keep their previous center.
void update_centers(const RowMatrixF& points, const std::vector<ShardId>& labels, MetricTag metric,
                    RowMatrixF& centers);

/// Sum of squared L2 distances of points to their assigned centers.
double kmeans_objective(const RowMatrixF& points, const RowMatrixF& centers,
                        const std::vector<ShardId>& labels);

}  // namespace shardann
