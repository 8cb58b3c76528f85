#include "shardann/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "shardann/kmeans.hpp"
#include "shardann/random.hpp"

namespace shardann {

std::size_t shard_size_limit(std::size_t n, std::size_t divisor, double epsilon) {
  if (divisor == 0) throw InputError("shard_size_limit: divisor must be positive");
  const double raw = (1.0 + epsilon) * static_cast<double>(n) / static_cast<double>(divisor);
  const auto limit = static_cast<std::size_t>(std::floor(raw + 1e-9));
  const std::size_t minimum = (n + divisor - 1) / divisor;
  return std::max(limit, minimum);
}

Partition Partition::disjoint(std::vector<ShardId> labels, std::size_t num_shards, double epsilon,
                              std::size_t size_divisor) {
  Partition p;
  p.lists_.resize(labels.size());
  for (std::size_t u = 0; u < labels.size(); ++u) p.lists_[u] = {labels[u]};
  p.num_shards_ = num_shards;
  p.epsilon_ = epsilon;
  p.size_divisor_ = size_divisor == 0 ? num_shards : size_divisor;
  p.validate();
  return p;
}

Partition Partition::overlapping(std::vector<std::vector<ShardId>> lists, std::size_t num_shards,
                                 double epsilon, std::size_t size_divisor) {
  Partition p;
  p.lists_ = std::move(lists);
  for (auto& l : p.lists_) std::sort(l.begin(), l.end());
  p.num_shards_ = num_shards;
  p.epsilon_ = epsilon;
  p.size_divisor_ = size_divisor == 0 ? num_shards : size_divisor;
  p.validate();
  return p;
}

void Partition::validate() const {
  if (num_shards_ == 0) throw InputError("partition: shard count must be positive");
  for (const auto& l : lists_) {
    if (l.empty()) throw InputError("partition: node without shard");
    if (std::adjacent_find(l.begin(), l.end()) != l.end()) throw InputError("partition: duplicate shard id");
    if (l.back() >= num_shards_) throw InputError("partition: shard id out of range");
  }
}

bool Partition::is_disjoint() const {
  return std::all_of(lists_.begin(), lists_.end(), [](const auto& l) { return l.size() == 1; });
}

bool Partition::contains(std::size_t u, ShardId shard) const {
  return std::binary_search(lists_[u].begin(), lists_[u].end(), shard);
}

std::vector<std::size_t> Partition::shard_sizes() const {
  std::vector<std::size_t> sizes(num_shards_, 0);
  for (const auto& l : lists_)
    for (ShardId s : l) ++sizes[s];
  return sizes;
}

std::vector<std::vector<PointId>> Partition::shard_members() const {
  std::vector<std::vector<PointId>> members(num_shards_);
  for (std::size_t u = 0; u < lists_.size(); ++u)
    for (ShardId s : lists_[u]) members[s].push_back(static_cast<PointId>(u));
  return members;
}

double Partition::overlap_factor() const {
  if (lists_.empty()) return 1.0;
  std::size_t volume = 0;
  for (const auto& l : lists_) volume += l.size();
  return static_cast<double>(volume) / static_cast<double>(lists_.size());
}

bool Partition::add(std::size_t u, ShardId shard) {
  if (shard >= num_shards_) throw InputError("partition: shard id out of range");
  auto& l = lists_[u];
  auto it = std::lower_bound(l.begin(), l.end(), shard);
  if (it != l.end() && *it == shard) return false;
  l.insert(it, shard);
  return true;
}

std::size_t cut_edges(const KnnGraph& graph, const Partition& p) {
  if (graph.size() != p.size()) throw InputError("cut_edges: size mismatch");
  std::size_t cut = 0;
  for (std::size_t u = 0; u < graph.size(); ++u) {
    const auto su = p.shards_of(u);
    for (PointId v : graph.neighbors(u)) {
      const auto sv = p.shards_of(v);
      auto a = su.begin();
      auto b = sv.begin();
      bool shared = false;
      while (a != su.end() && b != sv.end()) {
        if (*a == *b) { shared = true; break; }
        if (*a < *b) ++a; else ++b;
      }
      if (!shared) ++cut;
    }
  }
  return cut;
}

double max_imbalance(const Partition& p) {
  if (p.size() == 0) return 0.0;
  const auto sizes = p.shard_sizes();
  const std::size_t largest = *std::max_element(sizes.begin(), sizes.end());
  return static_cast<double>(largest) * static_cast<double>(p.size_divisor()) /
             static_cast<double>(p.size()) - 1.0;
}

namespace {

// Overflow points (farthest from their own center first) move to the closest
// center whose shard is below `limit`. Centers map to shards via `center_shard`.
void rebalance_by_centers(const RowMatrixF& points, const RowMatrixF& centers,
                          std::span<const ShardId> center_shard, std::size_t num_shards,
                          MetricTag metric, std::size_t limit, std::vector<ShardId>& shard_labels,
                          const std::vector<float>& own_distance) {
  const MetricTag assign_metric = kmeans_metric(metric);
  std::vector<std::size_t> sizes(num_shards, 0);
  for (ShardId s : shard_labels) ++sizes[s];
  std::vector<std::vector<std::size_t>> members(num_shards);
  for (std::size_t i = 0; i < shard_labels.size(); ++i) members[shard_labels[i]].push_back(i);

  for (std::size_t shard = 0; shard < num_shards; ++shard) {
    if (sizes[shard] <= limit) continue;
    auto& list = members[shard];
    std::sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
      return own_distance[a] > own_distance[b] || (own_distance[a] == own_distance[b] && a < b);
    });
    const std::size_t excess = sizes[shard] - limit;
    std::vector<Neighbor> order(static_cast<std::size_t>(centers.rows()));
    for (std::size_t e = 0; e < excess; ++e) {
      const std::size_t point = list[e];
      for (Eigen::Index c = 0; c < centers.rows(); ++c)
        order[static_cast<std::size_t>(c)] = {distance(assign_metric, points.row(static_cast<Eigen::Index>(point)), centers.row(c)),
                                              static_cast<PointId>(c)};
      std::sort(order.begin(), order.end());
      for (const Neighbor& c : order) {
        const ShardId target = center_shard[c.id];
        if (target != shard && sizes[target] < limit) {
          --sizes[shard];
          ++sizes[target];
          shard_labels[point] = target;
          break;
        }
      }
    }
  }
}

std::vector<ShardId> identity_map(std::size_t n) {
  std::vector<ShardId> ids(n);
  std::iota(ids.begin(), ids.end(), 0U);
  return ids;
}

Centroids make_centroids(const RowMatrixF& points, RowMatrixF centers, const std::vector<ShardId>& labels) {
  Centroids out;
  const auto k = static_cast<std::size_t>(centers.rows());
  out.centers = std::move(centers);
  out.counts.assign(k, 0);
  std::vector<double> norm_sums(k, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++out.counts[labels[i]];
    norm_sums[labels[i]] += points.row(static_cast<Eigen::Index>(i)).norm();
  }
  out.mean_norms.resize(k);
  for (std::size_t c = 0; c < k; ++c)
    out.mean_norms[c] = out.counts[c] == 0 ? 0.0F : static_cast<float>(norm_sums[c] / static_cast<double>(out.counts[c]));
  return out;
}

}  // namespace

void remigrate_overloaded(const RowMatrixF& points, const RowMatrixF& centers, MetricTag metric,
                          std::size_t limit, std::vector<ShardId>& labels) {
  const auto k = static_cast<std::size_t>(centers.rows());
  if (static_cast<std::size_t>(points.rows()) > k * limit)
    throw InputError("remigrate_overloaded: total capacity below point count");
  std::vector<float> own(labels.size());
  const MetricTag assign_metric = kmeans_metric(metric);
  for (std::size_t i = 0; i < labels.size(); ++i)
    own[i] = distance(assign_metric, points.row(static_cast<Eigen::Index>(i)), centers.row(labels[i]));
  const auto ids = identity_map(k);
  rebalance_by_centers(points, centers, ids, k, metric, limit, labels, own);
}

CenterPartition kmeans_partition(const Dataset& data, std::size_t s, double epsilon, std::uint64_t seed) {
  if (s == 0 || s > data.size()) throw InputError("kmeans_partition: need 1 <= s <= n");
  const std::size_t limit = shard_size_limit(data.size(), s, epsilon);
  auto rng = make_rng(seed, {0x6b6d});
  KMeansResult km = lloyd_kmeans(data.values(), s, 20, data.metric(), rng);
  remigrate_overloaded(data.values(), km.centers, data.metric(), limit, km.labels);
  Centroids centroids = make_centroids(data.values(), std::move(km.centers), km.labels);
  return {Partition::disjoint(std::move(km.labels), s, epsilon), std::move(centroids)};
}

namespace {

float assignment_cost(MetricTag metric, const Eigen::Ref<const Eigen::RowVectorXf>& x,
                      const Eigen::Ref<const Eigen::RowVectorXf>& c) {
  const MetricTag m = kmeans_metric(metric);
  if (m == MetricTag::L2) return (x - c).squaredNorm();
  return distance(m, x, c);
}

}  // namespace

BalancedKMeansResult balanced_kmeans_partition(const Dataset& data, std::size_t s, double epsilon,
                                               std::uint64_t seed, const BalancedKMeansParams& params) {
  if (s == 0 || s > data.size()) throw InputError("balanced_kmeans_partition: need 1 <= s <= n");
  const RowMatrixF& points = data.values();
  const std::size_t n = data.size();
  const std::size_t limit = shard_size_limit(n, s, epsilon);
  auto rng = make_rng(seed, {0x626b6d});
  KMeansResult km = lloyd_kmeans(points, s, params.init_rounds, data.metric(), rng);
  RowMatrixF& centers = km.centers;
  std::vector<ShardId>& labels = km.labels;

  std::vector<std::size_t> sizes(s, 0);
  for (ShardId l : labels) ++sizes[l];
  auto balanced = [&] { return *std::max_element(sizes.begin(), sizes.end()) <= limit; };

  BalancedKMeansResult out;
  if (!balanced()) {
    const double ideal = static_cast<double>(n) / static_cast<double>(s);
    // Penalty scale from the typical margin between nearest and second centers.
    double margin_sum = 0.0;
    if (s > 1) {
      for (std::size_t i = 0; i < n; ++i) {
        float best = std::numeric_limits<float>::max();
        float second = best;
        for (std::size_t c = 0; c < s; ++c) {
          const float cost = assignment_cost(data.metric(), points.row(static_cast<Eigen::Index>(i)),
                                             centers.row(static_cast<Eigen::Index>(c)));
          if (cost < best) { second = best; best = cost; } else if (cost < second) { second = cost; }
        }
        margin_sum += static_cast<double>(second - best);
      }
    }
    double mu = std::max(margin_sum / static_cast<double>(n), 1e-12) / ideal * 0.1;

    RowMatrix<double> sums = RowMatrix<double>::Zero(static_cast<Eigen::Index>(s), points.cols());
    std::vector<double> norm_sums(s, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(labels[i]) += points.row(static_cast<Eigen::Index>(i)).cast<double>();
      norm_sums[labels[i]] += points.row(static_cast<Eigen::Index>(i)).norm();
    }
    const bool spherical = uses_spherical_update(data.metric());
    auto refresh_center = [&](std::size_t c) {
      if (sizes[c] == 0) return;
      Eigen::RowVectorXd mean = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(sizes[c]);
      if (spherical && mean.norm() > 0.0) mean *= (norm_sums[c] / static_cast<double>(sizes[c])) / mean.norm();
      centers.row(static_cast<Eigen::Index>(c)) = mean.cast<float>();
    };
    for (std::size_t c = 0; c < s; ++c) refresh_center(c);

    const std::size_t sub_rounds = std::max<std::size_t>(1, std::min(params.sub_rounds, n));
    const std::size_t chunk = (n + sub_rounds - 1) / sub_rounds;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0U);
    std::vector<ShardId> wanted;
    bool done = false;
    for (std::size_t round = 0; round < params.max_rounds && !done; ++round) {
      ++out.penalized_rounds;
      std::size_t moved = 0;
      for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
      for (std::size_t begin = 0; begin < n && !done; begin += chunk) {
        const std::size_t end = std::min(n, begin + chunk);
        wanted.assign(end - begin, 0);
        // Decisions within a sub-round use the sizes at its start.
        for (std::size_t j = begin; j < end; ++j) {
          const std::size_t i = order[j];
          const auto x = points.row(static_cast<Eigen::Index>(i));
          double best = std::numeric_limits<double>::max();
          ShardId choice = labels[i];
          for (std::size_t c = 0; c < s; ++c) {
            const double size_after = static_cast<double>(c == labels[i] ? sizes[c] : sizes[c] + 1);
            const double cost = assignment_cost(data.metric(), x, centers.row(static_cast<Eigen::Index>(c))) +
                                mu * std::max(0.0, size_after - ideal);
            if (cost < best) { best = cost; choice = static_cast<ShardId>(c); }
          }
          wanted[j - begin] = choice;
        }
        std::vector<bool> touched(s, false);
        for (std::size_t j = begin; j < end; ++j) {
          const std::size_t i = order[j];
          const ShardId from = labels[i];
          const ShardId to = wanted[j - begin];
          if (from == to) continue;
          const auto x = points.row(static_cast<Eigen::Index>(i));
          sums.row(from) -= x.cast<double>();
          sums.row(to) += x.cast<double>();
          norm_sums[from] -= x.norm();
          norm_sums[to] += x.norm();
          --sizes[from];
          ++sizes[to];
          labels[i] = to;
          touched[from] = touched[to] = true;
          ++moved;
        }
        for (std::size_t c = 0; c < s; ++c)
          if (touched[c]) refresh_center(c);
        done = balanced();
      }
      if (done) break;
      if (static_cast<double>(moved) < 0.001 * static_cast<double>(n)) mu *= 2.0;
      else if (static_cast<double>(moved) > 0.05 * static_cast<double>(n)) mu *= 0.5;
    }
    if (!balanced()) {
      out.forced_finish = true;
      remigrate_overloaded(points, centers, data.metric(), limit, labels);
    }
  }
  Centroids centroids = make_centroids(points, std::move(centers), labels);
  out.result = {Partition::disjoint(std::move(labels), s, epsilon), std::move(centroids)};
  return out;
}

PyramidRouter::PyramidRouter(RowMatrixF centers, std::vector<ShardId> labels, std::size_t num_shards,
                             MetricTag metric)
    : centers_(std::move(centers)), labels_(std::move(labels)), num_shards_(num_shards), metric_(metric) {
  if (static_cast<std::size_t>(centers_.rows()) != labels_.size())
    throw InputError("PyramidRouter: center/label count mismatch");
  for (ShardId l : labels_)
    if (l >= num_shards_) throw InputError("PyramidRouter: shard label out of range");
}

std::vector<std::pair<ShardId, double>> PyramidRouter::route(const Eigen::Ref<const Eigen::RowVectorXf>& q,
                                                             std::size_t nearest) const {
  const MetricTag m = kmeans_metric(metric_);
  std::vector<Neighbor> scored(labels_.size());
  for (std::size_t c = 0; c < labels_.size(); ++c)
    scored[c] = {distance(m, q, centers_.row(static_cast<Eigen::Index>(c))), static_cast<PointId>(c)};
  const std::size_t take = std::min(nearest, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end());
  std::vector<double> best(num_shards_, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < take; ++i) {
    const ShardId s = labels_[scored[i].id];
    best[s] = std::min(best[s], static_cast<double>(scored[i].distance));
  }
  std::vector<std::pair<ShardId, double>> order(num_shards_);
  for (std::size_t s = 0; s < num_shards_; ++s) order[s] = {static_cast<ShardId>(s), best[s]};
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  return order;
}

PyramidResult pyramid_partition(const Dataset& data, std::size_t s, double epsilon, std::uint64_t seed,
                                const PyramidParams& params) {
  const std::size_t n = data.size();
  if (params.sample_size > n) throw InputError("pyramid_partition: sample_size exceeds n");
  if (s < 2 || s > params.sample_size) throw InputError("pyramid_partition: need 2 <= s <= sample_size");
  auto rng = make_rng(seed, {0x7079});
  const std::size_t drawn = std::min(n, params.sample_size * std::max<std::size_t>(1, params.subsample_factor));
  const auto picks = sample_without_replacement(rng, static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(drawn));
  const Dataset sample = data.subset(picks);
  KMeansResult km = lloyd_kmeans(sample.values(), params.sample_size, params.kmeans_rounds, data.metric(), rng);
  const Dataset meta(km.centers, kmeans_metric(data.metric()));

  const std::size_t degree = std::min(params.graph_degree, meta.size() - 1);
  const KnnGraph graph = build_exact_knn(meta, degree);
  const Partition meta_partition = partition_graph(graph, s, epsilon, derive_seed(seed, {0x7079, 1}));
  std::vector<ShardId> center_shard(meta.size());
  for (std::size_t c = 0; c < meta.size(); ++c) center_shard[c] = meta_partition.shard_of(c);

  std::vector<ShardId> nearest_center;
  std::vector<float> own_distance;
  assign_to_centers(data.values(), km.centers, data.metric(), nearest_center, own_distance);
  std::vector<ShardId> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = center_shard[nearest_center[i]];

  const std::size_t limit = shard_size_limit(n, s, epsilon);
  rebalance_by_centers(data.values(), km.centers, center_shard, s, data.metric(), limit, labels, own_distance);

  PyramidResult out{Partition::disjoint(std::move(labels), s, epsilon),
                    PyramidRouter(std::move(km.centers), std::move(center_shard), s, data.metric())};
  return out;
}

}  // namespace shardann
