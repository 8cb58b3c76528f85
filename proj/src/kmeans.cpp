#include "shardann/kmeans.hpp"

#include <algorithm>

namespace shardann {

MetricTag kmeans_metric(MetricTag metric) {
  return metric == MetricTag::Hamming ? MetricTag::L2 : metric;
}

bool uses_spherical_update(MetricTag metric) {
  return metric == MetricTag::InnerProduct || metric == MetricTag::Angular;
}

void assign_to_centers(const RowMatrixF& points, const RowMatrixF& centers, MetricTag metric,
                       std::vector<ShardId>& labels, std::vector<float>& center_distances) {
  const auto nearest = exact_knn(centers, points, kmeans_metric(metric), 1, false);
  labels.resize(nearest.size());
  center_distances.resize(nearest.size());
  for (std::size_t i = 0; i < nearest.size(); ++i) {
    labels[i] = nearest[i][0].id;
    center_distances[i] = nearest[i][0].distance;
  }
}

void update_centers(const RowMatrixF& points, const std::vector<ShardId>& labels, MetricTag metric,
                    RowMatrixF& centers) {
  const Eigen::Index k = centers.rows();
  RowMatrix<double> sums = RowMatrix<double>::Zero(k, points.cols());
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  std::vector<double> norm_sums(static_cast<std::size_t>(k), 0.0);
  const bool spherical = uses_spherical_update(metric);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const ShardId c = labels[static_cast<std::size_t>(i)];
    sums.row(c) += points.row(i).cast<double>();
    ++counts[c];
    if (spherical) norm_sums[c] += points.row(i).norm();
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    const std::size_t cnt = counts[static_cast<std::size_t>(c)];
    if (cnt == 0) continue;
    Eigen::RowVectorXd mean = sums.row(c) / static_cast<double>(cnt);
    if (spherical) {
      const double norm = mean.norm();
      const double target = norm_sums[static_cast<std::size_t>(c)] / static_cast<double>(cnt);
      if (norm > 0.0) mean *= target / norm;
    }
    centers.row(c) = mean.cast<float>();
  }
}

KMeansResult lloyd_kmeans(const RowMatrixF& points, std::size_t clusters, std::size_t rounds,
                          MetricTag metric, Rng& rng) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (clusters == 0 || clusters > n) throw InputError("kmeans: need 1 <= clusters <= n");
  KMeansResult result;
  const auto seeds = sample_without_replacement(rng, static_cast<std::uint32_t>(n),
                                                static_cast<std::uint32_t>(clusters));
  result.centers.resize(static_cast<Eigen::Index>(clusters), points.cols());
  for (std::size_t c = 0; c < clusters; ++c)
    result.centers.row(static_cast<Eigen::Index>(c)) = points.row(seeds[c]);

  for (std::size_t round = 0; round < rounds; ++round) {
    assign_to_centers(points, result.centers, metric, result.labels, result.center_distances);
    update_centers(points, result.labels, metric, result.centers);

    std::vector<std::size_t> counts(clusters, 0);
    for (ShardId label : result.labels) ++counts[label];
    if (std::find(counts.begin(), counts.end(), 0U) == counts.end()) continue;
    std::vector<std::size_t> by_distance(n);
    for (std::size_t i = 0; i < n; ++i) by_distance[i] = i;
    std::sort(by_distance.begin(), by_distance.end(), [&](std::size_t a, std::size_t b) {
      return result.center_distances[a] > result.center_distances[b] ||
             (result.center_distances[a] == result.center_distances[b] && a < b);
    });
    std::size_t next = 0;
    for (std::size_t c = 0; c < clusters; ++c) {
      if (counts[c] != 0) continue;
      // Only donate from clusters that keep at least one member.
      while (next < n && counts[result.labels[by_distance[next]]] <= 1) ++next;
      if (next == n) break;
      const std::size_t donor = by_distance[next++];
      --counts[result.labels[donor]];
      result.labels[donor] = static_cast<ShardId>(c);
      counts[c] = 1;
      result.centers.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(donor));
    }
  }
  assign_to_centers(points, result.centers, metric, result.labels, result.center_distances);
  return result;
}

double kmeans_objective(const RowMatrixF& points, const RowMatrixF& centers,
                        const std::vector<ShardId>& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    total += (points.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  return total;
}

}  // namespace shardann
