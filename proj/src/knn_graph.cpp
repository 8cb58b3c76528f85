#include "shardann/knn_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shardann/parallel.hpp"
#include "shardann/random.hpp"

namespace shardann {

KnnGraph::KnnGraph(std::vector<std::vector<PointId>> adjacency, std::size_t degree_bound)
    : adjacency_(std::move(adjacency)), degree_bound_(degree_bound) {
  const std::size_t n = adjacency_.size();
  std::vector<PointId> scratch;
  for (std::size_t u = 0; u < n; ++u) {
    const auto& nbrs = adjacency_[u];
    if (nbrs.size() > degree_bound_) throw InputError("KnnGraph: degree bound exceeded");
    scratch.assign(nbrs.begin(), nbrs.end());
    std::sort(scratch.begin(), scratch.end());
    if (std::adjacent_find(scratch.begin(), scratch.end()) != scratch.end())
      throw InputError("KnnGraph: duplicate neighbor");
    for (PointId v : nbrs) {
      if (v >= n) throw InputError("KnnGraph: neighbor id out of range");
      if (v == u) throw InputError("KnnGraph: self-loop");
    }
  }
}

std::size_t KnnGraph::num_edges() const {
  std::size_t total = 0;
  for (const auto& nbrs : adjacency_) total += nbrs.size();
  return total;
}

void BallCarvingParams::validate() const {
  if (repetitions < 1) throw InputError("ball carving: repetitions must be >= 1");
  if (fanout < 1) throw InputError("ball carving: fanout must be >= 1");
  if (max_cluster_size < 2) throw InputError("ball carving: max_cluster_size must be >= 2");
  if (top_level_pivots < 1) throw InputError("ball carving: top_level_pivots must be >= 1");
  if (!(pivot_fraction > 0.0 && pivot_fraction < 1.0))
    throw InputError("ball carving: pivot_fraction must be in (0, 1)");
}

void NeighborAccumulator::insert(Neighbor candidate) {
  if (k_ == 0) return;
  auto existing = std::find_if(best_.begin(), best_.end(),
                               [&](const Neighbor& nb) { return nb.id == candidate.id; });
  if (existing != best_.end()) {
    if (!(candidate.distance < existing->distance)) return;
    best_.erase(existing);
  } else if (best_.size() == k_) {
    if (!(candidate < best_.back())) return;
    best_.pop_back();
  }
  best_.insert(std::upper_bound(best_.begin(), best_.end(), candidate), candidate);
}

void NeighborAccumulator::merge(const NeighborAccumulator& other) {
  for (const Neighbor& nb : other.best_) insert(nb);
}

namespace {

KnnGraph graph_from_lists(const std::vector<std::vector<Neighbor>>& lists, std::size_t k) {
  std::vector<std::vector<PointId>> adjacency(lists.size());
  for (std::size_t u = 0; u < lists.size(); ++u) {
    adjacency[u].reserve(lists[u].size());
    for (const Neighbor& nb : lists[u]) adjacency[u].push_back(nb.id);
  }
  return KnnGraph(std::move(adjacency), k);
}

RowMatrixF gather(const RowMatrixF& values, std::span<const PointId> ids) {
  RowMatrixF out(static_cast<Eigen::Index>(ids.size()), values.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = values.row(ids[i]);
  return out;
}

class BallCarver {
 public:
  BallCarver(const Dataset& data, std::size_t k, const BallCarvingParams& params, Rng rng)
      : data_(data), k_(k), params_(params), rng_(rng), acc_(data.size(), NeighborAccumulator(k)) {}

  std::vector<NeighborAccumulator> run() {
    std::vector<PointId> all(data_.size());
    std::iota(all.begin(), all.end(), 0U);
    carve(all, 0);
    return std::move(acc_);
  }

 private:
  void carve(const std::vector<PointId>& ids, std::size_t level) {
    const std::size_t size = ids.size();
    if (size <= params_.max_cluster_size) {
      leaf(ids);
      return;
    }
    std::size_t pivots = level == 0
                             ? params_.top_level_pivots
                             : static_cast<std::size_t>(std::ceil(params_.pivot_fraction * static_cast<double>(size)));
    pivots = std::clamp<std::size_t>(pivots, 2, size);
    const std::size_t fan = std::min(level == 0 ? params_.fanout : std::size_t{1}, pivots);

    const auto picks = sample_without_replacement(rng_, static_cast<std::uint32_t>(size),
                                                  static_cast<std::uint32_t>(pivots));
    std::vector<PointId> pivot_ids(picks.size());
    for (std::size_t i = 0; i < picks.size(); ++i) pivot_ids[i] = ids[picks[i]];
    const RowMatrixF pivot_matrix = gather(data_.values(), pivot_ids);
    const auto closest = level == 0 && size == data_.size()
                             ? exact_knn(pivot_matrix, data_.values(), data_.metric(), fan, false)
                             : exact_knn(pivot_matrix, gather(data_.values(), ids), data_.metric(), fan, false);

    std::vector<std::vector<PointId>> clusters(pivots);
    for (std::size_t i = 0; i < size; ++i)
      for (const Neighbor& p : closest[i]) clusters[p.id].push_back(ids[i]);

    const bool stalled = std::any_of(clusters.begin(), clusters.end(),
                                     [&](const auto& c) { return c.size() == size; });
    if (stalled) {
      leaf(ids);
      return;
    }
    for (const auto& cluster : clusters)
      if (!cluster.empty()) carve(cluster, level + 1);
  }

  // ids are ascending, so local tie order equals global tie order.
  void leaf(const std::vector<PointId>& ids) {
    if (ids.size() < 2) return;
    const RowMatrixF block = gather(data_.values(), ids);
    const auto lists = exact_knn(block, block, data_.metric(), k_, true);
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (const Neighbor& nb : lists[i]) acc_[ids[i]].insert({nb.distance, ids[nb.id]});
  }

  const Dataset& data_;
  std::size_t k_;
  const BallCarvingParams& params_;
  Rng rng_;
  std::vector<NeighborAccumulator> acc_;
};

}  // namespace

KnnGraph build_exact_knn(const Dataset& data, std::size_t k) {
  if (k >= data.size()) throw InputError("build_exact_knn: need k < n");
  return graph_from_lists(exact_knn(data.values(), data.values(), data.metric(), k, true), k);
}

KnnGraph build_approx_knn(const Dataset& data, std::size_t k, const BallCarvingParams& params) {
  if (k >= data.size()) throw InputError("build_approx_knn: need k < n");
  params.validate();
  std::vector<std::vector<NeighborAccumulator>> per_rep(params.repetitions);
  parallel_for(0, params.repetitions, [&](std::size_t rep) {
    per_rep[rep] = BallCarver(data, k, params, make_rng(params.seed, {rep})).run();
  });
  std::vector<NeighborAccumulator>& merged = per_rep[0];
  for (std::size_t rep = 1; rep < per_rep.size(); ++rep) {
    for (std::size_t u = 0; u < merged.size(); ++u) merged[u].merge(per_rep[rep][u]);
    per_rep[rep].clear();
  }
  std::vector<std::vector<Neighbor>> lists(merged.size());
  for (std::size_t u = 0; u < merged.size(); ++u) lists[u] = merged[u].sorted();
  return graph_from_lists(lists, k);
}

double graph_recall(const KnnGraph& approx, const KnnGraph& exact) {
  if (approx.size() != exact.size()) throw InputError("graph_recall: node count mismatch");
  std::size_t hits = 0;
  std::size_t total = 0;
  std::vector<PointId> truth;
  for (std::size_t u = 0; u < exact.size(); ++u) {
    auto ex = exact.neighbors(u);
    truth.assign(ex.begin(), ex.end());
    std::sort(truth.begin(), truth.end());
    total += truth.size();
    for (PointId v : approx.neighbors(u))
      if (std::binary_search(truth.begin(), truth.end(), v)) ++hits;
  }
  return total == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace shardann
