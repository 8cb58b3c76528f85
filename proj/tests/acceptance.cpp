// One line per acceptance criterion; exit status is non-zero if any fails.
//
// Base data is the synthetic SIFT-like set (100K x 128, 1000 queries) unless
// SHARDANN_SIFT_BASE and SHARDANN_SIFT_QUERIES name .fvecs/.fbin files, in
// which case the first 100K base and 1000 query vectors are used.

#include <algorithm>
#include <chrono>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "properties.hpp"
#include "shardann/eval.hpp"
#include "shardann/io.hpp"
#include "shardann/overlap.hpp"
#include "shardann/synthetic.hpp"

using namespace shardann;

namespace {

// Pinned thresholds.
constexpr double kFirstShardRecall = 0.90;    // criterion 1
constexpr double kLowQualityTarget = 0.30;    // criterion 2: graph recall of the row examined
constexpr double kSweepTolerance = 0.03;      // criterion 2: gap to the exact-graph row
constexpr double kSweepMinutes = 30.0;
constexpr double kCutRatio = 0.70;            // criterion 3
constexpr double kRoutedExact = 0.95;         // criterion 4, m = n
constexpr double kRoutedSampled = 0.90;       // criterion 4, m = n / 4
constexpr double kHypercubeSeconds = 60.0;
constexpr std::size_t kPropertyInstances = 50;  // criterion 5

constexpr std::size_t kBase = 100000;
constexpr std::size_t kQueries = 1000;
constexpr std::size_t kShards = 16;
constexpr double kEpsilon = 0.05;
constexpr std::size_t kK = 10;

int failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("criterion %d %s: %s | %s\n", id, pass ? "PASS" : "FAIL", title.c_str(), detail.c_str());
  std::fflush(stdout);
}

class Stopwatch {
 public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

Dataset head(const Dataset& d, std::size_t rows) {
  if (d.size() <= rows) return d;
  return Dataset(RowMatrixF(d.values().topRows(static_cast<Eigen::Index>(rows))), d.metric());
}

struct Workload {
  std::string source;
  Dataset data;
  Dataset queries;
  GroundTruth gt;
  KnnGraph approx;  // default ball-carving parameters
  KnnGraph exact;
};

Workload load() {
  Workload w;
  const char* base = std::getenv("SHARDANN_SIFT_BASE");
  const char* queries = std::getenv("SHARDANN_SIFT_QUERIES");
  if (base != nullptr && queries != nullptr) {
    w.source = std::string(base) + " (first 100K)";
    w.data = head(read_vectors(base, MetricTag::L2), kBase);
    w.queries = head(read_vectors(queries, MetricTag::L2), kQueries);
  } else {
    w.source = "synthetic SIFT-like 100K x 128";
    w.data = sift_like(kBase, 1);
    w.queries = sift_like(kQueries, 2);
  }
  w.gt = compute_ground_truth(w.data, w.queries, kK);
  return w;
}

KmrParams kmr_params() {
  KmrParams p;
  p.index_size = 50000;
  p.centroids_per_node = 32;
  p.cluster_threshold = 200;
  return p;
}

void criterion1(Workload& w) {
  const Stopwatch clock;
  w.approx = build_approx_knn(w.data, kK, BallCarvingParams{});
  const Partition p = partition_graph(w.approx, kShards, kEpsilon, 1);
  const KmrTree tree = kmr_train(w.data, p, kmr_params(), 1);
  const RecallCurve c = recall_vs_probes(route_kmr(tree, w.queries, 5000), p, w.gt, kK);
  const RecallCurve oracle = recall_vs_probes(oracle_probe_orders(w.gt, p, kK), p, w.gt, kK);
  report(1, "GP + KMR first-shard recall@10", c.at(1) >= kFirstShardRecall,
         w.source + ", s=16: recall " + fmt(c.at(1)) + " (oracle " + fmt(oracle.at(1)) + ") >= " +
             fmt(kFirstShardRecall, 2) + ", " + fmt(clock.seconds(), 0) + " s");
}

void criterion2(Workload& w) {
  const Stopwatch clock;
  w.exact = build_exact_knn(w.data, kK);
  auto setting = [](std::size_t reps, std::size_t fanout, std::size_t leaf) {
    SweepSetting s;
    s.label = "r" + std::to_string(reps) + "-f" + std::to_string(fanout) + "-c" + std::to_string(leaf);
    s.graph.repetitions = reps;
    s.graph.fanout = fanout;
    s.graph.max_cluster_size = leaf;
    return s;
  };
  std::vector<SweepSetting> grid{setting(2, 2, 50),  setting(3, 3, 30),  setting(2, 1, 100),
                                 setting(3, 3, 100), setting(2, 2, 200), setting(3, 3, 2500)};
  grid.insert(grid.begin(), SweepSetting{"exact", true, {}});
  SweepConfig config;
  config.shards = kShards;
  config.kmr = kmr_params();
  config.seed = 1;
  const auto rows = graph_quality_sweep(w.data, w.queries, w.gt, grid, config, &w.exact);
  const SweepRow* exact = &rows.front();
  const SweepRow* nearest = nullptr;
  for (const SweepRow& r : rows)
    if (!r.setting.exact &&
        (nearest == nullptr ||
         std::abs(r.graph_recall - kLowQualityTarget) < std::abs(nearest->graph_recall - kLowQualityTarget)))
      nearest = &r;
  std::vector<double> gr, qr;
  for (const SweepRow& r : rows) {
    gr.push_back(r.graph_recall);
    qr.push_back(r.query_recall);
    std::printf("  sweep %-12s graph recall %.4f query recall %.4f cut %zu\n", r.setting.label.c_str(),
                r.graph_recall, r.query_recall, r.cut);
  }
  const double gap = exact->query_recall - nearest->query_recall;
  const double minutes = clock.seconds() / 60.0;
  report(2, "low-quality graph keeps query recall", gap <= kSweepTolerance && minutes < kSweepMinutes,
         nearest->setting.label + " graph recall " + fmt(nearest->graph_recall) + ": query recall " +
             fmt(nearest->query_recall) + " vs exact " + fmt(exact->query_recall) + " (gap " + fmt(gap) +
             " <= " + fmt(kSweepTolerance, 2) + "), spearman " + fmt(spearman(gr, qr), 3) + ", " + fmt(minutes, 1) +
             " min");
}

/// Uncovered arcs with u as tail or head, counted from the adjacency lists.
std::size_t incident_uncovered(const KnnGraph& g, const std::vector<std::vector<PointId>>& reverse,
                               const Partition& p, PointId u) {
  auto shared = [&](PointId v) {
    for (ShardId a : p.shards_of(u))
      if (p.contains(v, a)) return true;
    return false;
  };
  std::size_t count = 0;
  for (PointId v : g.neighbors(u)) count += shared(v) ? 0 : 1;
  for (PointId v : reverse[u]) count += shared(v) ? 0 : 1;
  return count;
}

void criterion3(const Workload& w) {
  const Stopwatch clock;
  OverlapParams params;
  params.overlap = 1.2;
  params.target_shards = 20;
  params.epsilon = kEpsilon;
  const KnnGraph& g = w.approx;
  const Partition disjoint = partition_graph(g, params.pre_overlap_shards(), kEpsilon, 1);
  const std::size_t before = cut_edges(g, disjoint);

  // Only arcs touching the replicated node change coverage, so tracking each
  // node's incident uncovered arcs gives the exact drop of every placement.
  const auto reverse = reverse_adjacency(g);
  std::vector<std::size_t> incident(g.size());
  for (std::size_t u = 0; u < g.size(); ++u) incident[u] = incident_uncovered(g, reverse, disjoint, static_cast<PointId>(u));
  std::size_t placements = 0, mismatches = 0, removed = 0;
  OverlapStats stats;
  const Partition grown = overlap_graph_partition(g, disjoint, params, &stats, [&](const Placement& pl, const Partition& p) {
    const std::size_t after = incident_uncovered(g, reverse, p, pl.node);
    if (incident[pl.node] - after != pl.gain) ++mismatches;
    removed += incident[pl.node] - after;
    incident[pl.node] = after;
    for (PointId v : g.neighbors(pl.node)) incident[v] = incident_uncovered(g, reverse, p, v);
    for (PointId v : reverse[pl.node]) incident[v] = incident_uncovered(g, reverse, p, v);
    ++placements;
  });
  const std::size_t after = cut_edges(g, grown);
  const double ratio = static_cast<double>(after) / static_cast<double>(before);
  const double base = recall_vs_probes(oracle_probe_orders(w.gt, disjoint, kK), disjoint, w.gt, kK).at(1);
  const double over = recall_vs_probes(oracle_probe_orders(w.gt, grown, kK), grown, w.gt, kK).at(1);
  const bool exact_gains = mismatches == 0 && before - removed == after && stats.final_cut == after;
  report(3, "overlap o=1.2 (s=20, 24 disjoint shards)", ratio <= kCutRatio && over > base && exact_gains && testing::balanced(grown),
         "uncovered arcs " + std::to_string(before) + " -> " + std::to_string(after) + " (" + fmt(ratio, 3) +
             " <= " + fmt(kCutRatio, 2) + "), oracle recall@1 " + fmt(base) + " -> " + fmt(over) + ", " +
             std::to_string(placements) + " placements, " + std::to_string(mismatches) +
             " gain mismatches, overlap " + fmt(grown.overlap_factor(), 3) + ", " + fmt(clock.seconds(), 0) + " s");
}

/// Fraction of queries whose top-1 shard holds a point within alpha * pi_rank(q).
double routed_fraction(const Dataset& data, const Dataset& queries, const Partition& p, std::size_t m,
                       std::size_t rank, double alpha) {
  HrtParams params;
  params.index_size = m;
  params.repetitions = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(data.size()))));
  params.tokens = 24;
  params.family = LshFamilyTag::BitSampling;
  const HrtIndex index = hrt_train(data, p, params, 7);
  const GroundTruth gt = compute_ground_truth(data, queries, rank);
  const auto members = p.shard_members();
  std::size_t good = 0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const CandidateSet c = hrt_route(index, queries.row(i), 2);
    const ShardId top = aggregate_probe_order(c.candidates, AggregationMode::Ranking, p.num_shards(), data.metric()).shards.front();
    const double radius = alpha * gt.distances(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(rank - 1));
    bool hit = false;
    for (PointId v : members[top]) hit = hit || distance(data.metric(), queries.row(i), data.row(v)) <= radius;
    good += hit ? 1 : 0;
  }
  return static_cast<double>(good) / static_cast<double>(queries.size());
}

void criterion4() {
  const Stopwatch clock;
  const std::size_t n = 512;
  const double alpha = 16.0;
  const double delta = 0.1;
  const Dataset data = random_hypercube(n, 64, 3);
  const Dataset queries = perturbed_hypercube_queries(data, 1000, 1, 4);
  const Partition p = partition_graph(build_exact_knn(data, 10), 8, kEpsilon, 5);
  const double full = routed_fraction(data, queries, p, n, 1, alpha);
  const std::size_t m = n / 4;
  const auto rank = static_cast<std::size_t>(std::ceil(std::log(1.0 / delta) * static_cast<double>(n) / static_cast<double>(m)));
  const double sampled = routed_fraction(data, queries, p, m, rank, alpha);
  const double seconds = clock.seconds();
  report(4, "HRT routing on the hypercube (t=24, r=23, W=2, alpha=16)",
         full >= kRoutedExact && sampled >= kRoutedSampled && seconds < kHypercubeSeconds,
         "m=n: " + fmt(full, 3) + " >= " + fmt(kRoutedExact, 2) + "; m=n/4 within alpha*pi_" + std::to_string(rank) +
             ": " + fmt(sampled, 3) + " >= " + fmt(kRoutedSampled, 2) + "; " + fmt(seconds, 1) + " s");
}

void criterion5() {
  const Stopwatch clock;
  const auto results = testing::run_property_suite(kPropertyInstances);
  std::size_t failed = 0, checks = 0;
  std::string first;
  for (const auto& r : results) {
    checks += r.checks;
    if (r.failures > 0) {
      ++failed;
      if (first.empty()) first = "; first failure: " + r.name + " at " + r.first_failure;
    }
    std::printf("  property %-52s %6zu checks %zu failures\n", r.name.c_str(), r.checks, r.failures);
  }
  report(5, "property suites", failed == 0 && results.size() == 12,
         std::to_string(results.size()) + " properties, " + std::to_string(checks) + " checks over " +
             std::to_string(kPropertyInstances) + " instances, " + std::to_string(failed) + " failing" + first + ", " +
             fmt(clock.seconds(), 0) + " s");
}

void criterion6() {
  std::ifstream in(SHARDANN_README);
  std::stringstream s;
  s << in.rdbuf();
  std::string text;
  for (char c : s.str()) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space) text += c;
    else if (!text.empty() && text.back() != ' ') text += ' ';
  }
  const bool ok = text.find("Table 1") != std::string::npos && text.find("Table 2") != std::string::npos &&
                  text.find("QPS") != std::string::npos && text.find("not reproducible at desk scale") != std::string::npos &&
                  text.find("criteria 1-5") != std::string::npos;
  report(6, "out-of-scope disclosure in README", ok, ok ? "QPS (Table 1) and partition times (Table 2) disclosed"
                                                       : "disclosure missing from " SHARDANN_README);
}

}  // namespace

int main() {
  criterion4();
  criterion5();
  criterion6();
  Workload w = load();
  criterion1(w);
  criterion2(w);
  criterion3(w);
  std::printf("%d of 6 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
