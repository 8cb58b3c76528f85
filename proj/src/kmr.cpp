#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <tuple>

#include "shardann/kmeans.hpp"
#include "shardann/parallel.hpp"
#include "shardann/random.hpp"
#include "shardann/routing.hpp"

namespace shardann {

ProbeOrder order_by_score(std::span<const double> score_per_shard) {
  ProbeOrder out;
  out.shards.resize(score_per_shard.size());
  std::iota(out.shards.begin(), out.shards.end(), 0U);
  std::stable_sort(out.shards.begin(), out.shards.end(),
                   [&](ShardId a, ShardId b) { return score_per_shard[a] < score_per_shard[b]; });
  out.scores.resize(out.shards.size());
  for (std::size_t i = 0; i < out.shards.size(); ++i) out.scores[i] = score_per_shard[out.shards[i]];
  return out;
}

KmrTree::KmrTree(KmrParams params, MetricTag metric, std::size_t dim, std::vector<std::int32_t> roots,
                 std::vector<Node> nodes)
    : params_(params), metric_(metric), dim_(dim), roots_(std::move(roots)), nodes_(std::move(nodes)) {
  for (std::int32_t r : roots_)
    if (r < 0 || static_cast<std::size_t>(r) >= nodes_.size()) throw InputError("KmrTree: bad root index");
  for (const Node& node : nodes_) {
    if (static_cast<std::size_t>(node.centroids.rows()) != node.children.size())
      throw InputError("KmrTree: children not parallel to centroids");
    if (node.centroids.rows() > 0 && static_cast<std::size_t>(node.centroids.cols()) != dim_)
      throw InputError("KmrTree: centroid dimension mismatch");
    if (node.shard >= roots_.size()) throw InputError("KmrTree: node shard out of range");
    for (std::int32_t c : node.children)
      if (c >= static_cast<std::int32_t>(nodes_.size())) throw InputError("KmrTree: bad child index");
  }
}

std::size_t KmrTree::total_centroids() const {
  std::size_t total = 0;
  for (const Node& node : nodes_) total += static_cast<std::size_t>(node.centroids.rows());
  return total;
}

bool operator==(const KmrTree& a, const KmrTree& b) {
  if (a.metric_ != b.metric_ || a.dim_ != b.dim_ || a.roots_ != b.roots_ || a.nodes_.size() != b.nodes_.size())
    return false;
  if (a.params_.centroids_per_node != b.params_.centroids_per_node || a.params_.index_size != b.params_.index_size ||
      a.params_.cluster_threshold != b.params_.cluster_threshold)
    return false;
  for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
    const auto& x = a.nodes_[i];
    const auto& y = b.nodes_[i];
    if (x.shard != y.shard || x.children != y.children || x.centroids.rows() != y.centroids.rows() ||
        x.centroids.cols() != y.centroids.cols() || !(x.centroids.array() == y.centroids.array()).all())
      return false;
  }
  return true;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const KmrParams& params, ShardId shard, Rng rng)
      : data_(data), params_(params), shard_(shard), rng_(rng) {}

  std::vector<KmrTree::Node> build(const std::vector<PointId>& members, double budget) {
    nodes_.push_back({shard_, RowMatrixF(0, static_cast<Eigen::Index>(data_.dim())), {}});
    recurse(0, members, budget);
    return std::move(nodes_);
  }

 private:
  void recurse(std::size_t node, const std::vector<PointId>& points, double budget) {
    if (budget <= 1.0 || points.empty()) return;
    const std::size_t count = std::min({params_.centroids_per_node, points.size(),
                                        static_cast<std::size_t>(std::floor(budget))});
    if (count == 0) return;
    const RowMatrixF block = data_.subset(points).values();
    KMeansResult km = lloyd_kmeans(block, count, params_.kmeans_rounds, data_.metric(), rng_);
    std::vector<std::vector<PointId>> clusters(count);
    for (std::size_t i = 0; i < points.size(); ++i) clusters[km.labels[i]].push_back(points[i]);
    nodes_[node].centroids = std::move(km.centers);
    nodes_[node].children.assign(count, -1);
    const double child_pool = budget - static_cast<double>(count);
    for (std::size_t c = 0; c < count; ++c) {
      const auto& cluster = clusters[c];
      // An unsplit cluster would recurse forever on degenerate input.
      if (cluster.size() <= params_.cluster_threshold || cluster.size() == points.size()) continue;
      const double child_budget =
          child_pool * static_cast<double>(cluster.size()) / static_cast<double>(points.size());
      if (child_budget <= 1.0) continue;
      const auto child = static_cast<std::int32_t>(nodes_.size());
      nodes_.push_back({shard_, RowMatrixF(0, static_cast<Eigen::Index>(data_.dim())), {}});
      nodes_[node].children[c] = child;
      recurse(static_cast<std::size_t>(child), cluster, child_budget);
    }
  }

  const Dataset& data_;
  const KmrParams& params_;
  ShardId shard_;
  Rng rng_;
  std::vector<KmrTree::Node> nodes_;
};

}  // namespace

KmrTree kmr_train(const Dataset& data, const Partition& p, const KmrParams& params, std::uint64_t seed) {
  if (p.size() != data.size()) throw InputError("kmr_train: dataset/partition size mismatch");
  const std::size_t s = p.num_shards();
  if (params.index_size <= s) throw InputError("kmr_train: index size m must exceed the shard count");
  if (params.cluster_threshold < 2) throw InputError("kmr_train: cluster threshold must be >= 2");
  if (params.centroids_per_node < 1) throw InputError("kmr_train: need at least one centroid per node");

  const auto members = p.shard_members();
  std::size_t volume = 0;
  for (const auto& m : members) volume += m.size();

  std::vector<std::vector<KmrTree::Node>> per_shard(s);
  parallel_for(0, s, [&](std::size_t shard) {
    // Budgets split by shard volume so replicated points do not overspend m.
    const double budget = static_cast<double>(members[shard].size()) *
                          static_cast<double>(params.index_size - s) / static_cast<double>(volume);
    per_shard[shard] = TreeBuilder(data, params, static_cast<ShardId>(shard), make_rng(seed, {0x6b6d72, shard}))
                           .build(members[shard], budget);
  });

  std::vector<std::int32_t> roots(s);
  std::vector<KmrTree::Node> nodes;
  for (std::size_t shard = 0; shard < s; ++shard) {
    const auto offset = static_cast<std::int32_t>(nodes.size());
    roots[shard] = offset;
    for (auto& node : per_shard[shard]) {
      for (auto& c : node.children)
        if (c >= 0) c += offset;
      nodes.push_back(std::move(node));
    }
  }
  return KmrTree(params, data.metric(), data.dim(), std::move(roots), std::move(nodes));
}

ProbeOrder kmr_route(const KmrTree& tree, const Eigen::Ref<const Eigen::RowVectorXf>& q, std::size_t budget) {
  if (static_cast<std::size_t>(q.size()) != tree.dim()) throw InputError("kmr_route: query dimension mismatch");
  const MetricTag metric = kmeans_metric(tree.metric());
  std::vector<double> min_dist(tree.num_shards(), std::numeric_limits<double>::infinity());
  using Item = std::tuple<float, ShardId, std::int32_t>;  // (key, shard, node)
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (std::size_t s = 0; s < tree.num_shards(); ++s)
    heap.emplace(0.0F, static_cast<ShardId>(s), tree.roots()[s]);
  const auto& nodes = tree.nodes();
  while (!heap.empty() && budget-- > 0) {
    const auto [key, shard, id] = heap.top();
    heap.pop();
    const auto& node = nodes[static_cast<std::size_t>(id)];
    for (Eigen::Index c = 0; c < node.centroids.rows(); ++c) {
      const float d = distance(metric, q, node.centroids.row(c));
      min_dist[shard] = std::min(min_dist[shard], static_cast<double>(d));
      const std::int32_t child = node.children[static_cast<std::size_t>(c)];
      if (child >= 0) heap.emplace(d, shard, child);
    }
  }
  return order_by_score(min_dist);
}

ProbeOrder kmr_route_exhaustive(const KmrTree& tree, const Eigen::Ref<const Eigen::RowVectorXf>& q) {
  if (static_cast<std::size_t>(q.size()) != tree.dim()) throw InputError("kmr_route: query dimension mismatch");
  const MetricTag metric = kmeans_metric(tree.metric());
  std::vector<double> min_dist(tree.num_shards(), std::numeric_limits<double>::infinity());
  for (const auto& node : tree.nodes())
    for (Eigen::Index c = 0; c < node.centroids.rows(); ++c)
      min_dist[node.shard] = std::min(min_dist[node.shard], static_cast<double>(distance(metric, q, node.centroids.row(c))));
  return order_by_score(min_dist);
}

}  // namespace shardann
