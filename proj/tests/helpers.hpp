#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "shardann/core.hpp"
#include "shardann/knn_graph.hpp"
#include "shardann/partition.hpp"
#include "shardann/random.hpp"

namespace testing {

using namespace shardann;

inline Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed, MetricTag metric = MetricTag::L2) {
  auto rng = make_rng(seed, {0x7465});
  RowMatrixF v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v.data()[i] = metric == MetricTag::Hamming ? static_cast<float>(rng() & 1U)
                                               : static_cast<float>(standard_normal(rng));
  return Dataset(std::move(v), metric);
}

inline RowMatrixF matrix(std::initializer_list<std::initializer_list<float>> rows) {
  RowMatrixF m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (float x : r) m(i, j++) = x;
    ++i;
  }
  return m;
}

/// Quadratic scan: every candidate's distance, sorted by (distance, id).
inline std::vector<Neighbor> brute_force(const Dataset& data, const Eigen::RowVectorXf& q, std::size_t k,
                                         std::int64_t skip = -1) {
  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (static_cast<std::int64_t>(i) == skip) continue;
    all.push_back({distance(data.metric(), q, data.row(i)), static_cast<PointId>(i)});
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

inline std::vector<std::vector<PointId>> brute_force_graph(const Dataset& data, std::size_t k) {
  std::vector<std::vector<PointId>> adj(data.size());
  for (std::size_t u = 0; u < data.size(); ++u)
    for (const Neighbor& nb : brute_force(data, data.row(u), k, static_cast<std::int64_t>(u))) adj[u].push_back(nb.id);
  return adj;
}

/// Arcs whose endpoints share no shard, counted directly from the lists.
inline std::size_t uncovered_arcs(const KnnGraph& g, const Partition& p) {
  std::size_t cut = 0;
  for (std::size_t u = 0; u < g.size(); ++u)
    for (PointId v : g.neighbors(u)) {
      bool shared = false;
      for (ShardId a : p.shards_of(u))
        for (ShardId b : p.shards_of(v)) shared = shared || a == b;
      cut += shared ? 0 : 1;
    }
  return cut;
}

inline bool balanced(const Partition& p) {
  const auto sizes = p.shard_sizes();
  return *std::max_element(sizes.begin(), sizes.end()) <= p.size_limit();
}

inline KnnGraph path_graph() {
  return KnnGraph({{1}, {0, 2}, {1, 3}, {2}}, 2);
}

}  // namespace testing
