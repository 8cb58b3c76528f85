#pragma once

// Randomized invariant checks shared by the property test and the acceptance
// binary. Each instance draws its own size, dimension, metric and parameters.

#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "shardann/eval.hpp"
#include "shardann/io.hpp"
#include "shardann/parallel.hpp"

namespace testing {

struct PropertyResult {
  std::string name;
  std::size_t checks = 0;
  std::size_t failures = 0;
  std::string first_failure;
};

class PropertyLog {
 public:
  void check(const std::string& name, bool ok, const std::string& detail = {}) {
    auto [it, fresh] = index_.try_emplace(name, results_.size());
    if (fresh) results_.push_back({name, 0, 0, {}});
    PropertyResult& r = results_[it->second];
    ++r.checks;
    if (!ok && r.failures++ == 0) r.first_failure = detail;
  }
  [[nodiscard]] const std::vector<PropertyResult>& results() const { return results_; }

 private:
  std::vector<PropertyResult> results_;
  std::map<std::string, std::size_t> index_;
};

inline bool curve_monotone(const RecallCurve& c) {
  for (std::size_t eta = 2; eta <= c.num_shards(); ++eta)
    if (c.at(eta) < c.at(eta - 1)) return false;
  return c.at(c.num_shards()) > 1.0 - 1e-12;
}

inline void property_instance(std::uint64_t instance, PropertyLog& log) {
  auto rng = make_rng(instance, {0x70726f70});
  const std::size_t n = 100 + uniform_index(rng, 1901);
  const std::size_t d = 2 + uniform_index(rng, 15);
  const std::size_t s = 2 + uniform_index(rng, 9);
  constexpr MetricTag metrics[] = {MetricTag::L2, MetricTag::InnerProduct, MetricTag::Angular, MetricTag::Hamming};
  const MetricTag metric = metrics[instance % 4];
  const std::string tag = "instance " + std::to_string(instance) + " (n=" + std::to_string(n) +
                          ", d=" + std::to_string(d) + ", s=" + std::to_string(s) + ", " +
                          std::string(to_string(metric)) + ")";

  const Dataset data = random_dataset(n, d, derive_seed(instance, {1}), metric);
  const Dataset queries = random_dataset(40, d, derive_seed(instance, {2}), metric);
  const GroundTruth gt = compute_ground_truth(data, queries, 10);
  const KnnGraph g = build_exact_knn(data, 8);

  // balance and FM monotonicity
  GraphPartitionParams checked;
  checked.check_moves = true;
  Partition gp;
  try {
    gp = partition_graph(g, s, 0.05, instance, checked);
    log.check("fm never increases the cut", true);
  } catch (const std::logic_error& e) {
    log.check("fm never increases the cut", false, tag + ": " + e.what());
    gp = partition_graph(g, s, 0.05, instance);
  }
  log.check("balance gp", balanced(gp), tag);
  const CenterPartition km = kmeans_partition(data, s, 0.05, instance);
  log.check("balance km", balanced(km.partition), tag);
  const BalancedKMeansResult bkm = balanced_kmeans_partition(data, s, 0.05, instance);
  log.check("balance bkm", balanced(bkm.result.partition), tag);
  PyramidParams pp;
  pp.sample_size = std::min<std::size_t>(n, 200);
  const PyramidResult pyramid = pyramid_partition(data, s, 0.05, instance, pp);
  log.check("balance pyramid", balanced(pyramid.partition), tag);

  // KMR budget accounting
  KmrParams kp;
  kp.index_size = s + 1 + uniform_index(rng, n);
  kp.centroids_per_node = 2 + uniform_index(rng, 31);
  kp.cluster_threshold = 2 + uniform_index(rng, 99);
  const KmrTree tree = kmr_train(data, gp, kp, instance);
  log.check("kmr centroids <= m", tree.total_centroids() <= kp.index_size,
            tag + ": " + std::to_string(tree.total_centroids()) + " > " + std::to_string(kp.index_size));

  // HRT distance bound
  HrtParams hp;
  hp.index_size = n / 2 + uniform_index(rng, n - n / 2 + 1);
  hp.repetitions = 1 + uniform_index(rng, 6);
  hp.tokens = 1 + uniform_index(rng, 16);
  hp.family = default_family(metric);
  const HrtIndex hrt = hrt_train(data, gp, hp, instance);
  const std::size_t window = 1 + uniform_index(rng, 8);
  bool within = true;
  for (std::size_t i = 0; i < queries.size(); ++i)
    within = within && hrt_route(hrt, queries.row(i), window).distance_computations <= hp.repetitions * (2 * window + 1);
  log.check("hrt distance computations <= r(2W+1)", within, tag);

  // curves and oracle dominance
  const RecallCurve oracle = recall_vs_probes(oracle_probe_orders(gt, gp, 10), gp, gt, 10);
  log.check("recall curve monotone", curve_monotone(oracle), tag + " oracle");
  const std::vector<std::pair<std::string, std::vector<ProbeOrder>>> routers{
      {"kmr", route_kmr(tree, queries, 1 + uniform_index(rng, 500))},
      {"kmr-exhaustive", route_kmr_exhaustive(tree, queries)},
      {"hrt-ranking", route_hrt(hrt, queries, window, AggregationMode::Ranking)},
      {"hrt-voting", route_hrt(hrt, queries, window, AggregationMode::Voting)},
      {"nearest-member", route_nearest_member(data, gp, queries)}};
  for (const auto& [name, orders] : routers) {
    const RecallCurve c = recall_vs_probes(orders, gp, gt, 10);
    log.check("recall curve monotone", curve_monotone(c), tag + " " + name);
    bool dominated = true;
    for (std::size_t eta = 1; eta <= s; ++eta) dominated = dominated && oracle.at(eta) >= c.at(eta);
    log.check("disjoint oracle dominates routers", dominated, tag + " " + name);
  }
  const RecallCurve pyr = recall_vs_probes(route_pyramid(pyramid.router, queries, 16), pyramid.partition, gt, 10);
  log.check("recall curve monotone", curve_monotone(pyr), tag + " pyramid");
  const RecallCurve pyr_oracle =
      recall_vs_probes(oracle_probe_orders(gt, pyramid.partition, 10), pyramid.partition, gt, 10);
  bool dominated = true;
  for (std::size_t eta = 1; eta <= s; ++eta) dominated = dominated && pyr_oracle.at(eta) >= pyr.at(eta);
  log.check("disjoint oracle dominates routers", dominated, tag + " pyramid");

  // aggregation agreement on single-shard candidate sets
  for (int trial = 0; trial < 20; ++trial) {
    const auto shard = static_cast<ShardId>(uniform_index(rng, s));
    std::vector<Candidate> cands(1 + uniform_index(rng, 30));
    const double offset = metric == MetricTag::InnerProduct ? -3.0 : 0.0;
    for (std::size_t i = 0; i < cands.size(); ++i)
      cands[i] = {static_cast<PointId>(i), shard, static_cast<float>(offset + 4.0 * uniform_unit(rng))};
    log.check("ranking and voting agree on single-shard candidates",
              aggregate_probe_order(cands, AggregationMode::Ranking, s, metric).shards.front() ==
                  aggregate_probe_order(cands, AggregationMode::Voting, s, metric).shards.front(),
              tag);
  }

  // fbin round trip
  const auto path = std::filesystem::temp_directory_path() /
                    ("shardann_prop_" + std::to_string(::getpid()) + "_" + std::to_string(instance) + ".fbin");
  write_vectors(path, VectorFormat::Fbin, data.values());
  const RowMatrixF back = read_matrix(path, VectorFormat::Fbin);
  std::filesystem::remove(path);
  log.check("fbin round trip is bit-identical",
            back.rows() == data.values().rows() && back.cols() == data.values().cols() &&
                std::memcmp(back.data(), data.values().data(), sizeof(float) * static_cast<std::size_t>(back.size())) == 0,
            tag);

  // one worker vs several
  BallCarvingParams bp;
  bp.max_cluster_size = 20 + uniform_index(rng, 200);
  bp.top_level_pivots = 2 + uniform_index(rng, 50);
  bp.seed = instance;
  auto build_all = [&](std::size_t threads) {
    set_num_threads(threads);
    KnnGraph approx = build_approx_knn(data, 8, bp);
    Partition p = partition_graph(approx, s, 0.05, instance);
    KmrTree t = kmr_train(data, p, kp, instance);
    HrtIndex h = hrt_train(data, p, hp, instance);
    GroundTruth truth = compute_ground_truth(data, queries, 10);
    std::vector<ProbeOrder> orders = route_hrt(h, queries, window, AggregationMode::Voting);
    set_num_threads(0);
    return std::make_tuple(std::move(approx), std::move(p), std::move(t), std::move(h), std::move(truth),
                           std::move(orders));
  };
  const auto one = build_all(1);
  const auto many = build_all(4);
  const bool same = std::get<0>(one) == std::get<0>(many) && std::get<1>(one) == std::get<1>(many) &&
                    std::get<2>(one) == std::get<2>(many) && std::get<3>(one) == std::get<3>(many) &&
                    std::get<4>(one).ids == std::get<4>(many).ids &&
                    std::get<4>(one).distances == std::get<4>(many).distances && std::get<5>(one) == std::get<5>(many);
  log.check("threads 1 vs 4 bit-identical", same, tag);
}

inline std::vector<PropertyResult> run_property_suite(std::size_t instances, std::uint64_t first = 0) {
  PropertyLog log;
  for (std::uint64_t i = first; i < first + instances; ++i) property_instance(i, log);
  return log.results();
}

}  // namespace testing
