#include "shardann/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

#include "shardann/parallel.hpp"
#include "shardann/random.hpp"

namespace shardann {

ProbeOrder oracle_probe_order(std::span<const PointId> truth, const Partition& p) {
  const std::size_t s = p.num_shards();
  std::vector<bool> covered(truth.size(), false);
  std::vector<bool> used(s, false);
  std::vector<std::size_t> gain(s);
  ProbeOrder out;
  while (true) {
    std::fill(gain.begin(), gain.end(), 0);
    for (std::size_t i = 0; i < truth.size(); ++i)
      if (!covered[i])
        for (ShardId shard : p.shards_of(truth[i])) ++gain[shard];
    std::size_t best = s;
    for (std::size_t shard = 0; shard < s; ++shard)
      if (!used[shard] && gain[shard] > 0 && (best == s || gain[shard] > gain[best])) best = shard;
    if (best == s) break;
    used[best] = true;
    out.shards.push_back(static_cast<ShardId>(best));
    out.scores.push_back(-static_cast<double>(gain[best]));
    for (std::size_t i = 0; i < truth.size(); ++i)
      if (!covered[i] && p.contains(truth[i], static_cast<ShardId>(best))) covered[i] = true;
  }
  for (std::size_t shard = 0; shard < s; ++shard)
    if (!used[shard]) {
      out.shards.push_back(static_cast<ShardId>(shard));
      out.scores.push_back(std::numeric_limits<double>::infinity());
    }
  return out;
}

std::vector<ProbeOrder> oracle_probe_orders(const GroundTruth& gt, const Partition& p, std::size_t k) {
  if (k < 1 || k > gt.k()) throw InputError("oracle: k must be in [1, ground truth k]");
  std::vector<ProbeOrder> orders(gt.num_queries());
  parallel_for(0, orders.size(), [&](std::size_t q) { orders[q] = oracle_probe_order(gt.neighbors(q).first(k), p); });
  return orders;
}

namespace {

void check_orders(std::span<const ProbeOrder> orders, const Partition& p, const GroundTruth& gt, std::size_t k) {
  if (orders.size() != gt.num_queries()) throw InputError("recall_vs_probes: one probe order per query required");
  if (k < 1 || k > gt.k()) throw InputError("recall_vs_probes: k must be in [1, ground truth k]");
  for (const auto& order : orders)
    if (order.shards.size() != p.num_shards()) throw InputError("recall_vs_probes: probe order is not over all shards");
  for (Eigen::Index i = 0; i < gt.ids.size(); ++i)
    if (gt.ids.data()[i] >= p.size()) throw InputError("recall_vs_probes: ground truth id outside the partition");
}

RecallCurve average(const std::vector<std::vector<std::size_t>>& hits, std::size_t s, std::size_t k) {
  RecallCurve curve;
  curve.k = k;
  curve.num_queries = hits.size();
  curve.recall.assign(s, 0.0);
  // Sum in query order so the result does not depend on the worker count.
  for (const auto& row : hits)
    for (std::size_t e = 0; e < s; ++e) curve.recall[e] += static_cast<double>(row[e]) / static_cast<double>(k);
  if (!hits.empty())
    for (double& r : curve.recall) r /= static_cast<double>(hits.size());
  return curve;
}

}  // namespace

RecallCurve recall_vs_probes(std::span<const ProbeOrder> orders, const Partition& p, const GroundTruth& gt,
                             std::size_t k) {
  check_orders(orders, p, gt, k);
  const std::size_t s = p.num_shards();
  std::vector<std::vector<std::size_t>> hits(orders.size());
  parallel_for(0, orders.size(), [&](std::size_t q) {
    std::vector<std::size_t> position(s);
    for (std::size_t i = 0; i < s; ++i) position[orders[q].shards[i]] = i;
    std::vector<std::size_t> found_at(s, 0);
    for (PointId id : gt.neighbors(q).first(k)) {
      std::size_t earliest = s;
      for (ShardId shard : p.shards_of(id)) earliest = std::min(earliest, position[shard]);
      if (earliest < s) ++found_at[earliest];
    }
    auto& row = hits[q];
    row.assign(s, 0);
    std::size_t running = 0;
    for (std::size_t e = 0; e < s; ++e) row[e] = running += found_at[e];
  });
  return average(hits, s, k);
}

RecallCurve recall_vs_probes_scan(std::span<const ProbeOrder> orders, const Partition& p, const Dataset& data,
                                  const Dataset& queries, const GroundTruth& gt, std::size_t k) {
  check_orders(orders, p, gt, k);
  if (data.size() != p.size() || queries.size() != gt.num_queries() || queries.dim() != data.dim())
    throw InputError("recall_vs_probes_scan: inputs disagree in size");
  const std::size_t s = p.num_shards();
  const auto members = p.shard_members();
  std::vector<std::vector<std::size_t>> hits(orders.size());
  parallel_for(0, orders.size(), [&](std::size_t q) {
    NeighborAccumulator best(k);
    std::vector<bool> scanned(data.size(), false);
    const auto truth = gt.neighbors(q).first(k);
    auto& row = hits[q];
    row.assign(s, 0);
    for (std::size_t e = 0; e < s; ++e) {
      for (PointId id : members[orders[q].shards[e]]) {
        if (scanned[id]) continue;
        scanned[id] = true;
        best.insert({distance(data.metric(), queries.row(q), data.row(id)), id});
      }
      std::vector<PointId> ids;
      for (const Neighbor& nb : best.sorted()) ids.push_back(nb.id);
      std::size_t found = 0;
      for (PointId t : truth) found += std::count(ids.begin(), ids.end(), t) > 0 ? 1 : 0;
      row[e] = found;
    }
  });
  return average(hits, s, k);
}

std::vector<ProbeOrder> route_kmr(const KmrTree& tree, const Dataset& queries, std::size_t budget) {
  std::vector<ProbeOrder> out(queries.size());
  parallel_for(0, out.size(), [&](std::size_t q) { out[q] = kmr_route(tree, queries.row(q), budget); });
  return out;
}

std::vector<ProbeOrder> route_kmr_exhaustive(const KmrTree& tree, const Dataset& queries) {
  std::vector<ProbeOrder> out(queries.size());
  parallel_for(0, out.size(), [&](std::size_t q) { out[q] = kmr_route_exhaustive(tree, queries.row(q)); });
  return out;
}

std::vector<ProbeOrder> route_hrt(const HrtIndex& index, const Dataset& queries, std::size_t window,
                                  AggregationMode mode) {
  std::vector<ProbeOrder> out(queries.size());
  parallel_for(0, out.size(), [&](std::size_t q) {
    const CandidateSet c = hrt_route(index, queries.row(q), window);
    out[q] = aggregate_probe_order(c.candidates, mode, index.num_shards(), index.metric());
  });
  return out;
}

std::vector<ProbeOrder> route_pyramid(const PyramidRouter& router, const Dataset& queries, std::size_t nearest) {
  std::vector<ProbeOrder> out(queries.size());
  parallel_for(0, out.size(), [&](std::size_t q) {
    for (const auto& [shard, score] : router.route(queries.row(q), nearest)) {
      out[q].shards.push_back(shard);
      out[q].scores.push_back(score);
    }
  });
  return out;
}

std::vector<ProbeOrder> route_nearest_member(const Dataset& data, const Partition& p, const Dataset& queries) {
  if (data.size() != p.size() || queries.dim() != data.dim())
    throw InputError("route_nearest_member: inputs disagree in size");
  std::vector<ProbeOrder> out(queries.size());
  parallel_for(0, out.size(), [&](std::size_t q) {
    std::vector<double> best(p.num_shards(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double d = distance(data.metric(), queries.row(q), data.row(i));
      for (ShardId shard : p.shards_of(i)) best[shard] = std::min(best[shard], d);
    }
    out[q] = order_by_score(best);
  });
  return out;
}

std::vector<SweepRow> graph_quality_sweep(const Dataset& data, const Dataset& queries, const GroundTruth& gt,
                                          std::span<const SweepSetting> grid, const SweepConfig& config,
                                          const KnnGraph* exact_graph) {
  if (grid.empty()) throw InputError("graph_quality_sweep: empty grid");
  KnnGraph exact_local;
  if (!exact_graph) {
    exact_local = build_exact_knn(data, config.graph_k);
    exact_graph = &exact_local;
  }
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    SweepRow row;
    row.setting = grid[i];
    const std::uint64_t seed = derive_seed(config.seed, {0x7377, i});
    KnnGraph graph;
    if (grid[i].exact) {
      graph = *exact_graph;
    } else {
      BallCarvingParams params = grid[i].graph;
      params.seed = seed;
      graph = build_approx_knn(data, config.graph_k, params);
    }
    row.graph_recall = graph_recall(graph, *exact_graph);
    const Partition p = partition_graph(graph, config.shards, config.epsilon, config.seed);
    row.cut = cut_edges(*exact_graph, p);
    const KmrTree tree = kmr_train(data, p, config.kmr, config.seed);
    const auto orders = route_kmr(tree, queries, config.budget);
    row.query_recall = recall_vs_probes(orders, p, gt, config.k).at(1);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<AblationRow> loss_ablation(const Dataset& data, const Dataset& queries, const Partition& p,
                                       const GroundTruth& gt, std::span<const std::size_t> index_sizes,
                                       const KmrParams& base, std::size_t budget, std::size_t k,
                                       std::uint64_t seed) {
  auto label = [](RecallCurve c, const char* router) {
    c.router = router;
    return c;
  };
  const RecallCurve oracle = label(recall_vs_probes(oracle_probe_orders(gt, p, k), p, gt, k), "oracle");
  const RecallCurve nearest =
      label(recall_vs_probes(route_nearest_member(data, p, queries), p, gt, k), "no-coarsening");
  std::vector<AblationRow> rows;
  for (std::size_t m : index_sizes) {
    KmrParams params = base;
    params.index_size = m;
    const KmrTree tree = kmr_train(data, p, params, seed);
    AblationRow row;
    row.index_size = m;
    row.oracle = oracle;
    row.nearest_member = nearest;
    row.exact_centroids = label(recall_vs_probes(route_kmr_exhaustive(tree, queries), p, gt, k), "exact-nn");
    row.tree_search = label(recall_vs_probes(route_kmr(tree, queries, budget), p, gt, k), "approx-nn");
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("spearman: length mismatch");
  if (x.size() < 2) return 0.0;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

void write_curves_csv(std::ostream& out, std::span<const CurveRecord> records) {
  out << "dataset,partitioner,router,params_hash,eta,recall,n_queries,seed\n";
  const auto flags = out.flags();
  for (const auto& r : records)
    for (std::size_t e = 0; e < r.curve.recall.size(); ++e)
      out << r.dataset << ',' << r.partitioner << ',' << r.router << ',' << r.params_hash << ',' << e + 1 << ','
          << std::setprecision(17) << r.curve.recall[e] << ',' << r.curve.num_queries << ',' << r.seed << '\n';
  out.flags(flags);
}

}  // namespace shardann
