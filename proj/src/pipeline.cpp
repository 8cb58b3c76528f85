#include "shardann/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "shardann/eval.hpp"
#include "shardann/io.hpp"
#include "shardann/knn_graph.hpp"
#include "shardann/overlap.hpp"
#include "shardann/parallel.hpp"
#include "shardann/partition.hpp"
#include "shardann/routing.hpp"
#include "shardann/synthetic.hpp"

namespace shardann {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<std::size_t> parse_list(const std::string& text, const char* name) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size()) throw InputError(std::string("--") + name + ": not a list of integers: " + text);
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw InputError(std::string("--") + name + ": empty list");
  return out;
}

std::string join_list(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

/// Everything that determines an artifact; the worker count is left out on
/// purpose since outputs do not depend on it.
json params_json(const RunConfig& c) {
  return {{"command", c.command},
          {"mode", c.mode},
          {"metric", c.metric},
          {"k", c.k},
          {"shards", c.shards},
          {"epsilon", c.epsilon},
          {"overlap", c.overlap},
          {"graph-k", c.graph_k},
          {"graph-reps", c.graph_repetitions},
          {"fanout", c.fanout},
          {"max-cluster", c.max_cluster_size},
          {"pivots", c.top_level_pivots},
          {"pivot-fraction", c.pivot_fraction},
          {"m", c.m},
          {"l", c.l},
          {"lambda", c.lambda},
          {"budget", c.budget},
          {"reps", c.reps},
          {"tokens", c.tokens},
          {"window", c.window},
          {"family", c.family},
          {"aggregation", c.aggregation},
          {"nearest", c.nearest},
          {"sample-size", c.sample_size},
          {"scan", c.scan},
          {"m-grid", join_list(c.m_grid)},
          {"sweep-reps", join_list(c.sweep_repetitions)},
          {"sweep-fanout", join_list(c.sweep_fanout)},
          {"sweep-cluster", join_list(c.sweep_cluster_sizes)},
          {"kind", c.kind},
          {"n", c.n},
          {"dim", c.dim},
          {"flips", c.flips},
          {"seed", c.seed}};
}

fs::path manifest_path(const fs::path& artifact) {
  fs::path p = artifact;
  p += ".json";
  return p;
}

std::optional<json> read_manifest(const fs::path& artifact) {
  const fs::path p = manifest_path(artifact);
  if (!fs::exists(p)) return std::nullopt;
  std::ifstream in(p);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
}

std::string params_hash(const RunConfig& c) {
  const std::string text = params_json(c).dump();
  return hex64(fnv1a({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()}));
}

class Run {
 public:
  explicit Run(const RunConfig& c) : c_(c) {}

  void execute() {
    const std::string& cmd = c_.command;
    if (cmd == "generate") generate();
    else if (cmd == "compute-gt") compute_gt();
    else if (cmd == "build-graph") build_graph();
    else if (cmd == "graph-recall") graph_recall_cmd();
    else if (cmd == "partition") partition();
    else if (cmd == "overlap") overlap();
    else if (cmd == "train-router") train_router();
    else if (cmd == "route") route();
    else if (cmd == "evaluate") evaluate();
    else throw InputError("unknown command: " + cmd);
  }

 private:
  const fs::path& require(const fs::path& p, const char* flag) const {
    if (p.empty()) throw InputError(c_.command + ": missing --" + flag);
    if (flag != std::string("out") && !fs::exists(p)) throw InputError(c_.command + ": no such file: " + p.string());
    return p;
  }

  void require_mode(std::initializer_list<const char*> modes) const {
    for (const char* m : modes)
      if (c_.mode == m) return;
    std::string list;
    for (const char* m : modes) list += std::string(list.empty() ? "" : "|") + m;
    throw InputError(c_.command + ": mode must be one of " + list + (c_.mode.empty() ? "" : ", got " + c_.mode));
  }

  MetricTag metric() const { return parse_metric(c_.metric); }

  // Datasets are cached with their hashes so chained checks hash each file once.
  const Dataset& dataset() {
    if (!data_) {
      data_ = read_vectors(require(c_.dataset, "dataset"), metric());
      data_hash_ = dataset_hash(*data_);
      record_input("dataset", c_.dataset, data_hash_);
    }
    return *data_;
  }
  const Dataset& queries() {
    if (!queries_) {
      queries_ = read_vectors(require(c_.queries, "queries"), metric());
      queries_hash_ = dataset_hash(*queries_);
      record_input("queries", c_.queries, queries_hash_);
    }
    return *queries_;
  }

  void record_input(const std::string& role, const fs::path& path, const std::string& hash) {
    inputs_[role] = {{"path", path.string()}, {"hash", hash}};
  }

  std::string load_artifact_hash(const std::string& role, const fs::path& path) {
    const std::string hash = file_hash(path);
    record_input(role, path, hash);
    return hash;
  }

  /// Refuses artifacts whose manifest names a different dataset or query set.
  void check_provenance(const fs::path& artifact, const std::string& role) {
    const auto manifest = read_manifest(artifact);
    if (!manifest) return;
    auto check = [&](const char* key, const std::string& expected, const char* what) {
      if (expected.empty() || !manifest->contains(key)) return;
      const std::string got = (*manifest)[key].get<std::string>();
      if (got != expected)
        throw InputError("hash mismatch: " + role + " " + artifact.string() + " was built on " + what + " " + got +
                         ", but the given " + what + " hashes to " + expected);
    };
    check("dataset_hash", data_hash_, "dataset");
    check("queries_hash", queries_hash_, "queries");
    for (const auto& [key, value] : inputs_.items()) {
      if (!manifest->contains("inputs") || !(*manifest)["inputs"].contains(key) || key == "dataset" || key == "queries")
        continue;
      const std::string expected = value["hash"].get<std::string>();
      const std::string got = (*manifest)["inputs"][key]["hash"].get<std::string>();
      if (got != expected)
        throw InputError("hash mismatch: " + role + " " + artifact.string() + " was built from a different " + key +
                         " (" + got + " vs " + expected + ")");
    }
  }

  void check_size(std::size_t got, std::size_t expected, const std::string& what) const {
    if (got != expected)
      throw InputError("hash mismatch: " + what + " covers " + std::to_string(got) + " points but the dataset has " +
                       std::to_string(expected));
  }

  Partition load_partition(double epsilon, std::size_t divisor = 0) {
    const fs::path& path = require(c_.partition, "partition");
    check_provenance(path, "partition");
    Partition p = import_partition(path, epsilon, divisor);
    partition_hash_ = load_artifact_hash("partition", path);
    if (const auto manifest = read_manifest(path); manifest && manifest->contains("partitioner"))
      partitioner_name_ = (*manifest)["partitioner"].get<std::string>();
    return p;
  }

  Partition load_partition_for_data() {
    const auto manifest = read_manifest(require(c_.partition, "partition"));
    std::size_t divisor = 0;
    double eps = c_.epsilon;
    if (manifest && manifest->contains("size_divisor")) divisor = (*manifest)["size_divisor"].get<std::size_t>();
    if (manifest && manifest->contains("epsilon")) eps = (*manifest)["epsilon"].get<double>();
    return load_partition(eps, divisor);
  }

  GroundTruth load_gt() {
    const fs::path& path = require(c_.ground_truth, "gt");
    check_provenance(path, "ground truth");
    GroundTruth gt = read_ground_truth(path);
    load_artifact_hash("gt", path);
    // Later artifacts are checked against the sets the ground truth was computed on.
    if (const auto manifest = read_manifest(path)) {
      if (data_hash_.empty() && manifest->contains("dataset_hash")) data_hash_ = (*manifest)["dataset_hash"];
      if (queries_hash_.empty() && manifest->contains("queries_hash")) queries_hash_ = (*manifest)["queries_hash"];
    }
    if (const auto manifest = read_manifest(path); manifest && manifest->contains("dataset_name"))
      dataset_name_ = (*manifest)["dataset_name"].get<std::string>();
    return gt;
  }

  KnnGraph load_graph(const fs::path& path, const char* role) {
    check_provenance(path, role);
    KnnGraph g = read_graph(path);
    load_artifact_hash(role, path);
    return g;
  }

  void finish(const fs::path& artifact, json extra = json::object()) {
    json m = {{"artifact", artifact.filename().string()},
              {"content_hash", file_hash(artifact)},
              {"params", params_json(c_)},
              {"params_hash", params_hash(c_)},
              {"inputs", inputs_}};
    if (!data_hash_.empty()) m["dataset_hash"] = data_hash_;
    if (!queries_hash_.empty()) m["queries_hash"] = queries_hash_;
    if (!c_.dataset.empty()) m["dataset_name"] = c_.dataset.stem().string();
    for (const auto& [key, value] : extra.items()) m[key] = value;
    std::ofstream out(manifest_path(artifact));
    out << m.dump(2) << '\n';
    if (!out) throw InputError("cannot write manifest for " + artifact.string());
  }

  void generate() {
    const fs::path& out = require(c_.out, "out");
    Dataset d;
    if (c_.kind == "hypercube-queries") {
      d = perturbed_hypercube_queries(dataset(), c_.n, c_.flips, c_.seed);
    } else if (c_.kind == "sift") {
      SiftLikeParams params;
      params.dim = c_.dim;
      d = sift_like(c_.n, c_.seed, params);
    } else if (c_.kind == "hypercube") {
      d = random_hypercube(c_.n, c_.dim, c_.seed);
    } else if (c_.kind == "uniform") {
      d = uniform_cube(c_.n, c_.dim, c_.seed);
    } else {
      throw InputError("generate: --kind must be sift|hypercube|uniform|hypercube-queries");
    }
    write_vectors(out, format_for_path(out), d.values());
    json extra = {{"dataset_hash", dataset_hash(Dataset(read_matrix(out, format_for_path(out)), d.metric()))}};
    if (data_) extra["base_hash"] = data_hash_;
    extra.erase("queries_hash");
    finish(out, extra);
  }

  void compute_gt() {
    const fs::path& out = require(c_.out, "out");
    const GroundTruth gt = compute_ground_truth(dataset(), queries(), c_.k);
    write_ground_truth(out, gt);
    finish(out);
  }

  BallCarvingParams graph_params() const {
    BallCarvingParams p;
    p.repetitions = c_.graph_repetitions;
    p.fanout = c_.fanout;
    p.max_cluster_size = c_.max_cluster_size;
    p.top_level_pivots = c_.top_level_pivots;
    p.pivot_fraction = c_.pivot_fraction;
    p.seed = c_.seed;
    return p;
  }

  void build_graph() {
    require_mode({"exact", "approx"});
    const fs::path& out = require(c_.out, "out");
    const KnnGraph g = c_.mode == "exact" ? build_exact_knn(dataset(), c_.graph_k)
                                          : build_approx_knn(dataset(), c_.graph_k, graph_params());
    write_graph(out, g);
    finish(out, {{"edges", g.num_edges()}});
  }

  void graph_recall_cmd() {
    const KnnGraph approx = load_graph(require(c_.graph, "graph"), "graph");
    const KnnGraph exact = load_graph(require(c_.exact_graph, "exact-graph"), "exact-graph");
    const double recall = graph_recall(approx, exact);
    std::cout << "graph_recall " << recall << '\n';
    if (!c_.out.empty()) {
      std::ofstream(c_.out) << json{{"graph_recall", recall}}.dump(2) << '\n';
      finish(c_.out);
    }
  }

  void partition() {
    require_mode({"gp", "km", "bkm", "pyramid", "import"});
    const fs::path& out = require(c_.out, "out");
    const Dataset& data = dataset();
    Partition p;
    json extra = {{"partitioner", c_.mode}, {"epsilon", c_.epsilon}};
    auto write_centers = [&](const RowMatrixF& centers) {
      fs::path path = out;
      path += ".centers.fbin";
      write_vectors(path, VectorFormat::Fbin, centers);
      extra["centers"] = path.filename().string();
    };
    if (c_.mode == "gp") {
      const KnnGraph g = load_graph(require(c_.graph, "graph"), "graph");
      check_size(g.size(), data.size(), "graph");
      p = partition_graph(g, c_.shards, c_.epsilon, c_.seed);
    } else if (c_.mode == "km") {
      CenterPartition r = kmeans_partition(data, c_.shards, c_.epsilon, c_.seed);
      p = std::move(r.partition);
      write_centers(r.centroids.centers);
    } else if (c_.mode == "bkm") {
      BalancedKMeansResult r = balanced_kmeans_partition(data, c_.shards, c_.epsilon, c_.seed);
      p = std::move(r.result.partition);
      write_centers(r.result.centroids.centers);
      extra["penalized_rounds"] = r.penalized_rounds;
      extra["forced_finish"] = r.forced_finish;
    } else if (c_.mode == "pyramid") {
      PyramidParams params;
      params.sample_size = c_.sample_size;
      PyramidResult r = pyramid_partition(data, c_.shards, c_.epsilon, c_.seed, params);
      p = std::move(r.partition);
      fs::path path = out;
      path += ".router";
      write_router(path, r.router);
      extra["router"] = path.filename().string();
    } else {
      const fs::path& in = require(c_.input, "input");
      p = import_partition(in, c_.epsilon);
      load_artifact_hash("input", in);
      check_size(p.size(), data.size(), "imported partition " + in.string());
    }
    extra["size_divisor"] = p.size_divisor();
    extra["shards"] = p.num_shards();
    extra["max_imbalance"] = max_imbalance(p);
    export_partition(p, out);
    finish(out, extra);
    if (c_.mode == "pyramid") {
      fs::path path = out;
      path += ".router";
      json router_extra = {{"router", "pyramid"}, {"partition_hash", file_hash(out)}};
      finish(path, router_extra);
    }
  }

  OverlapParams overlap_params() const {
    OverlapParams p;
    p.overlap = c_.overlap;
    p.target_shards = c_.shards;
    p.epsilon = c_.epsilon;
    return p;
  }

  void overlap() {
    require_mode({"graph", "centers"});
    const fs::path& out = require(c_.out, "out");
    const OverlapParams params = overlap_params();
    const Dataset& data = dataset();
    Partition p;
    json extra = {{"partitioner", "o" + partitioner_label()}, {"epsilon", c_.epsilon}};
    if (c_.mode == "graph") {
      const KnnGraph g = load_graph(require(c_.graph, "graph"), "graph");
      check_size(g.size(), data.size(), "graph");
      OverlapStats stats;
      if (c_.partition.empty()) {
        p = overlapping_graph_partition(g, params, c_.seed, &stats);
      } else {
        const Partition disjoint = load_partition(c_.epsilon);
        check_size(disjoint.size(), data.size(), "partition");
        p = overlap_graph_partition(g, disjoint, params, &stats);
      }
      extra["initial_cut"] = stats.initial_cut;
      extra["final_cut"] = stats.final_cut;
      extra["rounds"] = stats.rounds;
      extra["placements"] = stats.placements;
    } else {
      const Partition disjoint = load_partition(c_.epsilon);
      check_size(disjoint.size(), data.size(), "partition");
      Centroids centers;
      centers.centers = read_matrix(require(c_.centers, "centers"), VectorFormat::Fbin);
      load_artifact_hash("centers", c_.centers);
      p = overlap_by_centers(data, disjoint, centers, params);
    }
    extra["size_divisor"] = p.size_divisor();
    extra["shards"] = p.num_shards();
    extra["overlap_factor"] = p.overlap_factor();
    export_partition(p, out);
    finish(out, extra);
  }

  std::string partitioner_label() {
    if (c_.mode == "centers") return c_.partitioner;
    return "gp";
  }

  void train_router() {
    require_mode({"kmr", "hrt"});
    const fs::path& out = require(c_.out, "out");
    const Dataset& data = dataset();
    const Partition p = load_partition_for_data();
    check_size(p.size(), data.size(), "partition");
    Router router;
    json extra = {{"router", c_.mode}, {"partition_hash", partition_hash_}};
    if (c_.mode == "kmr") {
      KmrParams params;
      params.centroids_per_node = c_.l;
      params.index_size = c_.m;
      params.cluster_threshold = c_.lambda;
      const KmrTree tree = kmr_train(data, p, params, c_.seed);
      extra["centroids"] = tree.total_centroids();
      router = tree;
    } else {
      HrtParams params;
      params.index_size = std::min(c_.m, data.size());
      params.repetitions = c_.reps;
      params.tokens = c_.tokens;
      params.family = c_.family.empty() ? default_family(data.metric()) : parse_family(c_.family);
      const HrtIndex index = hrt_train(data, p, params, c_.seed);
      extra["samples"] = index.sample_count();
      router = index;
    }
    write_router(out, router);
    finish(out, extra);
  }

  std::vector<ProbeOrder> route_with(const Router& router, const Dataset& q) const {
    if (const auto* kmr = std::get_if<KmrTree>(&router)) return route_kmr(*kmr, q, c_.budget);
    if (const auto* hrt = std::get_if<HrtIndex>(&router))
      return route_hrt(*hrt, q, c_.window, parse_aggregation(c_.aggregation));
    return route_pyramid(std::get<PyramidRouter>(router), q, c_.nearest);
  }

  std::string router_name(const Router& router) const {
    if (std::holds_alternative<KmrTree>(router)) return "kmr";
    if (std::holds_alternative<HrtIndex>(router)) return "hrt-" + c_.aggregation;
    return "pyramid";
  }

  Router load_router() {
    const fs::path& path = require(c_.router, "router");
    check_provenance(path, "router");
    Router r = read_router(path);
    router_hash_ = load_artifact_hash("router", path);
    if (const auto manifest = read_manifest(path); manifest && manifest->contains("partition_hash"))
      router_partition_hash_ = (*manifest)["partition_hash"].get<std::string>();
    return r;
  }

  void route() {
    const fs::path& out = require(c_.out, "out");
    const Router router = load_router();
    const auto orders = route_with(router, queries());
    write_probe_orders(out, orders);
    finish(out, {{"router", router_name(router)}, {"router_hash", router_hash_},
                 {"partition_hash", router_partition_hash_}});
  }

  void check_router_partition() const {
    if (!router_partition_hash_.empty() && router_partition_hash_ != partition_hash_)
      throw InputError("hash mismatch: router was trained on partition " + router_partition_hash_ +
                       ", but the given partition hashes to " + partition_hash_);
  }

  void write_csv(const fs::path& out, const std::vector<CurveRecord>& records) {
    std::ofstream csv(out);
    write_curves_csv(csv, records);
    if (!csv) throw InputError("cannot write " + out.string());
  }

  CurveRecord record(RecallCurve curve, const std::string& router) const {
    CurveRecord r;
    r.dataset = dataset_name_.empty() ? (c_.dataset.empty() ? "unknown" : c_.dataset.stem().string()) : dataset_name_;
    r.partitioner = partitioner_name_;
    r.router = router;
    r.params_hash = params_hash(c_);
    r.seed = c_.seed;
    curve.router = router;
    r.curve = std::move(curve);
    return r;
  }

  void evaluate() {
    require_mode({"curves", "oracle", "ablation", "graph-sweep"});
    const fs::path& out = require(c_.out, "out");
    if (c_.mode == "graph-sweep") return graph_sweep(out);
    const GroundTruth gt = load_gt();
    const Partition p = load_partition_for_data();
    std::vector<CurveRecord> records;
    if (c_.mode == "oracle") {
      records.push_back(record(recall_vs_probes(oracle_probe_orders(gt, p, c_.k), p, gt, c_.k), "oracle"));
    } else if (c_.mode == "curves") {
      std::vector<ProbeOrder> orders;
      std::string name;
      if (!c_.orders.empty()) {
        const fs::path& path = require(c_.orders, "orders");
        check_provenance(path, "probe orders");
        orders = read_probe_orders(path);
        load_artifact_hash("orders", path);
        const auto manifest = read_manifest(path);
        if (manifest && manifest->contains("partition_hash"))
          router_partition_hash_ = (*manifest)["partition_hash"].get<std::string>();
        name = manifest && manifest->contains("router") ? (*manifest)["router"].get<std::string>() : "orders";
      } else {
        const Router router = load_router();
        if (!c_.dataset.empty()) dataset();
        orders = route_with(router, queries());
        check_provenance(c_.ground_truth, "ground truth");
        name = router_name(router);
      }
      check_router_partition();
      if (c_.scan) {
        const RecallCurve scanned = recall_vs_probes_scan(orders, p, dataset(), queries(), gt, c_.k);
        records.push_back(record(scanned, name + "-scan"));
      } else {
        records.push_back(record(recall_vs_probes(orders, p, gt, c_.k), name));
      }
    } else {
      const Dataset& data = dataset();
      const Dataset& q = queries();
      check_provenance(c_.ground_truth, "ground truth");
      check_provenance(c_.partition, "partition");
      check_size(p.size(), data.size(), "partition");
      KmrParams base;
      base.centroids_per_node = c_.l;
      base.cluster_threshold = c_.lambda;
      const auto rows = loss_ablation(data, q, p, gt, c_.m_grid, base, c_.budget, c_.k, c_.seed);
      for (const auto& row : rows) {
        const std::string suffix = "@m=" + std::to_string(row.index_size);
        records.push_back(record(row.oracle, "oracle" + suffix));
        records.push_back(record(row.nearest_member, "no-coarsening" + suffix));
        records.push_back(record(row.exact_centroids, "exact-nn" + suffix));
        records.push_back(record(row.tree_search, "approx-nn" + suffix));
      }
    }
    write_csv(out, records);
    for (const auto& r : records)
      std::cout << r.router << " eta=1 recall=" << r.curve.at(1) << " eta=" << r.curve.num_shards()
                << " recall=" << r.curve.recall.back() << '\n';
    finish(out);
  }

  void graph_sweep(const fs::path& out) {
    const Dataset& data = dataset();
    const Dataset& q = queries();
    const GroundTruth gt = load_gt();
    std::vector<SweepSetting> grid;
    grid.push_back({"exact", true, {}});
    for (std::size_t r : c_.sweep_repetitions)
      for (std::size_t f : c_.sweep_fanout)
        for (std::size_t size : c_.sweep_cluster_sizes) {
          SweepSetting s;
          s.graph = graph_params();
          s.graph.repetitions = r;
          s.graph.fanout = f;
          s.graph.max_cluster_size = size;
          s.label = "r" + std::to_string(r) + "-f" + std::to_string(f) + "-c" + std::to_string(size);
          grid.push_back(s);
        }
    SweepConfig config;
    config.graph_k = c_.graph_k;
    config.shards = c_.shards;
    config.epsilon = c_.epsilon;
    config.kmr.centroids_per_node = c_.l;
    config.kmr.index_size = c_.m;
    config.kmr.cluster_threshold = c_.lambda;
    config.budget = c_.budget;
    config.k = c_.k;
    config.seed = c_.seed;
    const auto rows = graph_quality_sweep(data, q, gt, grid, config);
    std::ofstream csv(out);
    csv << "dataset,setting,repetitions,fanout,max_cluster_size,graph_recall,query_recall,cut,seed\n";
    csv.precision(17);
    std::vector<double> gr, qr;
    for (const auto& row : rows) {
      csv << c_.dataset.stem().string() << ',' << row.setting.label << ',' << row.setting.graph.repetitions << ','
          << row.setting.graph.fanout << ',' << row.setting.graph.max_cluster_size << ',' << row.graph_recall << ','
          << row.query_recall << ',' << row.cut << ',' << c_.seed << '\n';
      gr.push_back(row.graph_recall);
      qr.push_back(row.query_recall);
      std::cout << row.setting.label << " graph_recall=" << row.graph_recall << " query_recall=" << row.query_recall
                << '\n';
    }
    csv.close();
    const double rho = spearman(gr, qr);
    std::cout << "spearman " << rho << '\n';
    finish(out, {{"spearman", rho}});
  }

  const RunConfig& c_;
  std::optional<Dataset> data_;
  std::optional<Dataset> queries_;
  std::string data_hash_;
  std::string queries_hash_;
  std::string partition_hash_;
  std::string router_hash_;
  std::string router_partition_hash_;
  std::string partitioner_name_ = "unknown";
  std::string dataset_name_;
  json inputs_ = json::object();
};

std::vector<std::string> config_tokens(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw FormatError(path.string() + ": config must be a JSON object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : j.items()) {
    if (key == "command" || key == "mode") continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back("--" + key);
      continue;
    }
    tokens.push_back("--" + key);
    if (value.is_string()) tokens.push_back(value.get<std::string>());
    else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
      tokens.push_back(joined);
    } else tokens.push_back(value.dump());
  }
  return tokens;
}

}  // namespace

RunConfig parse_command_line(int argc, const char* const* argv) {
  RunConfig c;
  CLI::App app{"Balanced sharding and query routing for nearest-neighbor search", "shardann"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("command", c.command, "generate | compute-gt | build-graph | graph-recall | partition | overlap | "
                                       "train-router | route | evaluate")
      ->required();
  app.add_option("mode", c.mode, "exact|approx, gp|km|bkm|pyramid|import, graph|centers, kmr|hrt, "
                                 "curves|oracle|ablation|graph-sweep");
  std::string config_path;
  app.add_option("--config", config_path, "JSON file with flag values (flags given on the command line win)");

  app.add_option("--dataset", c.dataset);
  app.add_option("--queries", c.queries);
  app.add_option("--graph", c.graph);
  app.add_option("--exact-graph", c.exact_graph);
  app.add_option("--partition", c.partition);
  app.add_option("--centers", c.centers);
  app.add_option("--router-file", c.router, "trained router artifact");
  app.add_option("--gt", c.ground_truth);
  app.add_option("--orders", c.orders);
  app.add_option("--input", c.input, "external partition file for partition import");
  app.add_option("--out", c.out);

  app.add_option("--metric", c.metric)->capture_default_str();
  app.add_option("--k", c.k)->capture_default_str();
  app.add_option("--shards", c.shards)->capture_default_str();
  app.add_option("--epsilon", c.epsilon)->capture_default_str();
  app.add_option("--overlap", c.overlap)->capture_default_str();
  app.add_option("--partitioner", c.partitioner, "label of the base partitioner for centers overlap")
      ->capture_default_str();
  app.add_option("--router", c.router_kind, "router kind, same as the train-router mode")->capture_default_str();

  app.add_option("--graph-k", c.graph_k)->capture_default_str();
  app.add_option("--graph-reps", c.graph_repetitions)->capture_default_str();
  app.add_option("--fanout", c.fanout)->capture_default_str();
  app.add_option("--max-cluster", c.max_cluster_size)->capture_default_str();
  app.add_option("--pivots", c.top_level_pivots)->capture_default_str();
  app.add_option("--pivot-fraction", c.pivot_fraction)->capture_default_str();

  app.add_option("--m", c.m)->capture_default_str();
  app.add_option("--l", c.l)->capture_default_str();
  app.add_option("--lambda", c.lambda)->capture_default_str();
  app.add_option("--budget", c.budget)->capture_default_str();
  app.add_option("--reps", c.reps)->capture_default_str();
  app.add_option("--tokens", c.tokens)->capture_default_str();
  app.add_option("--window", c.window)->capture_default_str();
  app.add_option("--family", c.family, "bits | hyperplane | stable | constant");
  app.add_option("--aggregation", c.aggregation)->capture_default_str();
  app.add_option("--nearest", c.nearest)->capture_default_str();
  app.add_option("--sample-size", c.sample_size)->capture_default_str();

  app.add_flag("--scan", c.scan, "recompute curves by scanning shard vectors");
  std::string m_grid = join_list(c.m_grid);
  std::string sweep_reps = join_list(c.sweep_repetitions);
  std::string sweep_fanout = join_list(c.sweep_fanout);
  std::string sweep_cluster = join_list(c.sweep_cluster_sizes);
  app.add_option("--m-grid", m_grid)->capture_default_str();
  app.add_option("--sweep-reps", sweep_reps)->capture_default_str();
  app.add_option("--sweep-fanout", sweep_fanout)->capture_default_str();
  app.add_option("--sweep-cluster", sweep_cluster)->capture_default_str();

  app.add_option("--kind", c.kind, "sift | hypercube | uniform | hypercube-queries")->capture_default_str();
  app.add_option("--n", c.n)->capture_default_str();
  app.add_option("--dim", c.dim)->capture_default_str();
  app.add_option("--flips", c.flips)->capture_default_str();

  app.add_option("--seed", c.seed)->capture_default_str();
  app.add_option("--threads", c.threads, "worker cap, 0 for all cores")->capture_default_str();

  std::vector<std::string> args(argv + 1, argv + argc);
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--config") config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  if (!args.empty() && args.back().rfind("--config=", 0) == 0) config_path = args.back().substr(9);
  if (!config_path.empty()) {
    auto tokens = config_tokens(config_path);
    // Config values first so explicit flags, parsed later, take precedence.
    args.insert(args.begin(), tokens.begin(), tokens.end());
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    std::exit(0);
  } catch (const CLI::ParseError& e) {
    throw InputError(e.what());
  }
  c.m_grid = parse_list(m_grid, "m-grid");
  c.sweep_repetitions = parse_list(sweep_reps, "sweep-reps");
  c.sweep_fanout = parse_list(sweep_fanout, "sweep-fanout");
  c.sweep_cluster_sizes = parse_list(sweep_cluster, "sweep-cluster");
  if (c.command == "train-router" && c.mode.empty()) c.mode = c.router_kind;
  if (c.command == "partition" && c.mode.empty()) c.mode = c.partitioner;
  return c;
}

void run_pipeline(const RunConfig& config) {
  set_num_threads(config.threads);
  Run(config).execute();
}

int run_cli(int argc, const char* const* argv) {
  try {
    run_pipeline(parse_command_line(argc, argv));
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "shardann: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace shardann
