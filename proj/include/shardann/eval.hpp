#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "shardann/core.hpp"
#include "shardann/knn_graph.hpp"
#include "shardann/partition.hpp"
#include "shardann/routing.hpp"

namespace shardann {

/// Mean recall@k after probing the first eta shards, for eta = 1..s
/// (recall[eta - 1]).
struct RecallCurve {
  std::vector<double> recall;
  std::string router;
  std::string partition;
  std::size_t k = 0;
  std::size_t num_queries = 0;

  [[nodiscard]] std::size_t num_shards() const { return recall.size(); }
  [[nodiscard]] double at(std::size_t eta) const { return recall.at(eta - 1); }
};

/// Greedy order by marginal coverage of the query's true top-k. For disjoint
/// partitions this is the count-sorted order, which is optimal at every
/// prefix. Scores are the negated marginal counts; shards adding nothing
/// follow in ascending id with infinite score.
ProbeOrder oracle_probe_order(std::span<const PointId> truth, const Partition& p);
std::vector<ProbeOrder> oracle_probe_orders(const GroundTruth& gt, const Partition& p, std::size_t k);

/// Coverage recall: a true neighbor counts as found once any probed shard
/// holds it.
RecallCurve recall_vs_probes(std::span<const ProbeOrder> orders, const Partition& p, const GroundTruth& gt,
                             std::size_t k);

/// Same curve computed by scanning the probed shards' vectors for the top-k.
/// Slow; meant for spot checks of the coverage shortcut.
RecallCurve recall_vs_probes_scan(std::span<const ProbeOrder> orders, const Partition& p, const Dataset& data,
                                  const Dataset& queries, const GroundTruth& gt, std::size_t k);

// Batch routing over every query row, parallel over queries.
std::vector<ProbeOrder> route_kmr(const KmrTree& tree, const Dataset& queries, std::size_t budget);
std::vector<ProbeOrder> route_kmr_exhaustive(const KmrTree& tree, const Dataset& queries);
std::vector<ProbeOrder> route_hrt(const HrtIndex& index, const Dataset& queries, std::size_t window,
                                  AggregationMode mode);
std::vector<ProbeOrder> route_pyramid(const PyramidRouter& router, const Dataset& queries, std::size_t nearest);
/// Ranks shards by their nearest member to the query (routing without any
/// coarsening).
std::vector<ProbeOrder> route_nearest_member(const Dataset& data, const Partition& p, const Dataset& queries);

struct SweepSetting {
  std::string label;
  bool exact = false;
  BallCarvingParams graph;
};

struct SweepConfig {
  std::size_t graph_k = 10;
  std::size_t shards = 16;
  double epsilon = 0.05;
  KmrParams kmr;
  std::size_t budget = 5000;
  std::size_t k = 10;
  std::uint64_t seed = 0;
};

struct SweepRow {
  SweepSetting setting;
  double graph_recall = 0.0;
  double query_recall = 0.0;  // eta = 1, KMR routing
  std::size_t cut = 0;
};

/// One row per setting: graph recall against the exact graph, and first-shard
/// recall of partition_graph + KMR built on that graph.
std::vector<SweepRow> graph_quality_sweep(const Dataset& data, const Dataset& queries, const GroundTruth& gt,
                                          std::span<const SweepSetting> grid, const SweepConfig& config,
                                          const KnnGraph* exact_graph = nullptr);

struct AblationRow {
  std::size_t index_size = 0;
  RecallCurve oracle;
  RecallCurve nearest_member;
  RecallCurve exact_centroids;
  RecallCurve tree_search;
};

/// Routing-loss breakdown per index size m: oracle, no coarsening, exact
/// search over the KMR centroids, and budgeted tree search.
std::vector<AblationRow> loss_ablation(const Dataset& data, const Dataset& queries, const Partition& p,
                                       const GroundTruth& gt, std::span<const std::size_t> index_sizes,
                                       const KmrParams& base, std::size_t budget, std::size_t k,
                                       std::uint64_t seed);

/// Spearman rank correlation with average ranks for ties; 0 when either
/// input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

struct CurveRecord {
  std::string dataset;
  std::string partitioner;
  std::string router;
  std::string params_hash;
  std::uint64_t seed = 0;
  RecallCurve curve;
};

/// CSV with header dataset,partitioner,router,params_hash,eta,recall,n_queries,seed.
void write_curves_csv(std::ostream& out, std::span<const CurveRecord> records);

}  // namespace shardann
