#include <doctest.h>

#include "helpers.hpp"
#include "shardann/overlap.hpp"
#include "shardann/synthetic.hpp"

using namespace shardann;
using testing::matrix;
using testing::uncovered_arcs;

namespace {

OverlapParams params_for(double o, std::size_t s, double eps = 0.05) {
  OverlapParams p;
  p.overlap = o;
  p.target_shards = s;
  p.epsilon = eps;
  return p;
}

/// Fraction of arcs (u, v) of the exact graph whose endpoints share a shard:
/// recall of self-queries with exhaustive search in u's shards.
double self_query_recall(const KnnGraph& g, const Partition& p) {
  std::size_t covered = 0;
  for (std::size_t u = 0; u < g.size(); ++u)
    for (PointId v : g.neighbors(u)) {
      bool found = false;
      for (ShardId a : p.shards_of(u)) found = found || p.contains(v, a);
      covered += found ? 1 : 0;
    }
  return static_cast<double>(covered) / static_cast<double>(g.size() * g.degree_bound());
}

}  // namespace

TEST_CASE("parameters") {
  const OverlapParams p = params_for(1.2, 20);
  CHECK(p.pre_overlap_shards() == 24);
  CHECK(p.final_limit(1000) == 52);
  CHECK(params_for(1.25, 10).pre_overlap_shards() == 13);  // 12.5 rounds to nearest
  CHECK_THROWS_AS(params_for(0.9, 4).validate(100), InputError);
  CHECK_THROWS_AS(params_for(1.2, 0).validate(100), InputError);
  CHECK_THROWS_AS(params_for(2.0, 60).validate(100), InputError);
}

TEST_CASE("no cut edges leaves the partition unchanged") {
  // two rings, one per shard
  std::vector<std::vector<PointId>> adj(20);
  for (std::size_t u = 0; u < 20; ++u) adj[u] = {static_cast<PointId>((u / 10) * 10 + (u + 1) % 10)};
  const KnnGraph g(adj, 1);
  std::vector<ShardId> labels(20);
  for (std::size_t u = 0; u < 20; ++u) labels[u] = static_cast<ShardId>(u / 10);
  const Partition disjoint = Partition::disjoint(labels, 2, 0.05);
  OverlapStats stats;
  const Partition out = overlap_graph_partition(g, disjoint, params_for(2.0, 1), &stats);
  CHECK(out == disjoint);
  CHECK(stats.placements == 0);
  CHECK(stats.rounds == 0);
}

TEST_CASE("hand trace on a path") {
  // 0-1-2-3 with shards {0,1},{2,3}; both 1->{2,3} and 2->{0,1} have gain 2.
  const KnnGraph g = testing::path_graph();
  const Partition disjoint = Partition::disjoint({0, 0, 1, 1}, 2, 0.05);
  std::vector<Placement> applied;
  OverlapStats stats;
  const Partition out = overlap_graph_partition(g, disjoint, params_for(2.0, 1), &stats,
                                                [&](const Placement& pl, const Partition&) { applied.push_back(pl); });
  REQUIRE(applied.size() == 1);
  CHECK(applied[0].node == 1);
  CHECK(applied[0].shard == 1);
  CHECK(applied[0].gain == 2);
  CHECK(std::vector<ShardId>(out.shards_of(1).begin(), out.shards_of(1).end()) == std::vector<ShardId>{0, 1});
  CHECK(stats.initial_cut == 2);
  CHECK(stats.final_cut == 0);
  CHECK(stats.stale == 1);  // node 2's placement lost its gain once node 1 moved
  CHECK(cut_edges(g, out) == 0);
}

TEST_CASE("input validation") {
  const KnnGraph g = testing::path_graph();
  const Partition overlapping = Partition::overlapping({{0}, {0, 1}, {1}, {1}}, 2, 0.05, 1);
  CHECK_THROWS_AS(overlap_graph_partition(g, overlapping, params_for(2.0, 1)), InputError);
  CHECK_THROWS_AS(overlap_graph_partition(g, Partition::disjoint({0, 0, 1, 1}, 2, 0.05), params_for(1.0, 1)),
                  InputError);  // needs round(o * s) = 2 shards
  CHECK_THROWS_AS(overlap_graph_partition(g, Partition::disjoint({0, 0, 0, 1}, 2, 0.05), params_for(2.0, 1)),
                  InputError);  // 3 > floor(1.05 * 4 / 2)
}

TEST_CASE("graph overlap invariants on clustered data") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Dataset data = sift_like(1500, 100 + seed);
    const KnnGraph g = build_exact_knn(data, 10);
    const OverlapParams params = params_for(1.25, 8);
    const Partition disjoint = partition_graph(g, params.pre_overlap_shards(), params.epsilon, seed);
    std::size_t cut = uncovered_arcs(g, disjoint);
    const std::size_t initial = cut;
    std::size_t placements = 0;
    bool exact_gains = true;
    bool within_limit = true;
    OverlapStats stats;
    const Partition out = overlap_graph_partition(
        g, disjoint, params, &stats, [&](const Placement& pl, const Partition& p) {
          const std::size_t now = uncovered_arcs(g, p);
          exact_gains = exact_gains && now + pl.gain == cut && pl.gain > 0;
          cut = now;
          ++placements;
          for (std::size_t size : p.shard_sizes()) within_limit = within_limit && size <= params.final_limit(g.size());
        });
    CHECK(exact_gains);
    CHECK(within_limit);
    CHECK(placements == stats.placements);
    CHECK(placements <= initial);
    CHECK(stats.initial_cut == initial);
    CHECK(stats.final_cut == cut_edges(g, out));
    CHECK(stats.final_cut < initial);
    CHECK(out.size_divisor() == 8);
    CHECK(testing::balanced(out));
  }
}

TEST_CASE("a single placement raises self-query recall by gain / (k n)") {
  const Dataset data = sift_like(1000, 5);
  const KnnGraph g = build_exact_knn(data, 10);
  const OverlapParams params = params_for(1.2, 5);
  const Partition disjoint = partition_graph(g, params.pre_overlap_shards(), params.epsilon, 1);
  const double before = self_query_recall(g, disjoint);
  bool first = true;
  double after = 0.0;
  std::size_t gain = 0;
  overlap_graph_partition(g, disjoint, params, nullptr, [&](const Placement& pl, const Partition& p) {
    if (!first) return;
    first = false;
    gain = pl.gain;
    after = self_query_recall(g, p);
  });
  REQUIRE_FALSE(first);
  CHECK(after - before == doctest::Approx(static_cast<double>(gain) / (10.0 * 1000.0)).epsilon(1e-9));
}

TEST_CASE("placement gain counts uncovered arcs in both directions") {
  const KnnGraph g({{1, 2}, {2}, {0}, {0}}, 2);
  const auto reverse = reverse_adjacency(g);
  const Partition p = Partition::disjoint({0, 1, 1, 2}, 3, 0.05);
  CHECK(placement_gain(g, reverse, p, 0, 1) == 3);  // 0->1, 0->2, 2->0
  CHECK(placement_gain(g, reverse, p, 0, 2) == 1);  // 3->0
  CHECK(placement_gain(g, reverse, p, 0, 0) == 0);  // already there
}

TEST_CASE("centers overlap") {
  const Dataset data = sift_like(2000, 11);
  const OverlapParams params = params_for(1.2, 5);
  const CenterPartition km = kmeans_partition(data, params.pre_overlap_shards(), params.epsilon, 4);

  SUBCASE("o = 1 changes nothing") {
    const OverlapParams one = params_for(1.0, 6);
    const Partition out = overlap_by_centers(data, km.partition, km.centroids, one);
    CHECK(out == km.partition);
  }
  SUBCASE("capacity and volume bounds") {
    const Partition out = overlap_by_centers(data, km.partition, km.centroids, params);
    std::size_t volume = 0;
    for (std::size_t size : out.shard_sizes()) {
      CHECK(size <= params.final_limit(data.size()));
      volume += size;
    }
    CHECK(volume <= out.num_shards() * params.final_limit(data.size()));
    CHECK(volume <= data.size() + static_cast<std::size_t>(0.2 * 2000 + 1e-9));
    CHECK(volume > data.size());
  }
  SUBCASE("mismatched centers") {
    Centroids wrong;
    wrong.centers = RowMatrixF::Zero(3, 128);
    CHECK_THROWS_AS(overlap_by_centers(data, km.partition, wrong, params), InputError);
  }
}

TEST_CASE("a point midway between two blobs is replicated into both") {
  RowMatrixF centers = matrix({{-10, 0}, {10, 0}});
  const Dataset blobs = gaussian_blobs(centers, 200, 1.0F, 3);
  RowMatrixF v(201, 2);
  v.topRows(200) = blobs.values();
  v.row(200) << 0.0F, 0.5F;
  const Dataset data(v, MetricTag::L2);
  std::vector<ShardId> labels(201);
  for (std::size_t i = 0; i < 200; ++i) labels[i] = static_cast<ShardId>(i % 2);
  labels[200] = 0;
  const Partition disjoint = Partition::disjoint(labels, 2, 0.05);
  Centroids c;
  c.centers = centers;
  const Partition out = overlap_by_centers(data, disjoint, c, params_for(2.0, 1));
  CHECK(out.shards_of(200).size() == 2);
}
