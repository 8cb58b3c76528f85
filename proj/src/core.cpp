#include "shardann/core.hpp"

#include <algorithm>
#include <queue>

#include "shardann/parallel.hpp"

namespace shardann {

std::string_view to_string(MetricTag metric) {
  switch (metric) {
    case MetricTag::L2: return "l2";
    case MetricTag::InnerProduct: return "ip";
    case MetricTag::Angular: return "angular";
    case MetricTag::Hamming: return "hamming";
  }
  return "unknown";
}

MetricTag parse_metric(std::string_view name) {
  if (name == "l2") return MetricTag::L2;
  if (name == "ip" || name == "inner_product" || name == "mips") return MetricTag::InnerProduct;
  if (name == "angular" || name == "cosine") return MetricTag::Angular;
  if (name == "hamming") return MetricTag::Hamming;
  throw InputError("unknown metric: " + std::string(name));
}

namespace {

constexpr Eigen::Index kQueryBlock = 256;
constexpr Eigen::Index kBaseBlock = 2048;
constexpr std::size_t kRerankMargin = 16;

struct Scored {
  float score;
  PointId id;
  friend bool operator<(const Scored& a, const Scored& b) {
    return a.score < b.score || (a.score == b.score && a.id < b.id);
  }
};

}  // namespace

std::vector<std::vector<Neighbor>> exact_knn(const RowMatrixF& base, const RowMatrixF& queries,
                                             MetricTag metric, std::size_t k, bool exclude_self) {
  if (base.cols() != queries.cols()) throw InputError("exact_knn: dimension mismatch");
  const auto nb = static_cast<std::size_t>(base.rows());
  const auto nq = static_cast<std::size_t>(queries.rows());
  if (exclude_self && nq != nb) throw InputError("exact_knn: exclude_self needs queries == base");
  const std::size_t available = exclude_self ? nb - 1 : nb;
  const std::size_t keep = std::min(k, available);
  const std::size_t shortlist = std::min(keep + kRerankMargin, available);

  // Monotone proxies for the distance to a fixed query.
  Eigen::VectorXf base_aux(static_cast<Eigen::Index>(nb));
  if (metric == MetricTag::L2 || metric == MetricTag::Hamming)
    base_aux = base.rowwise().squaredNorm();
  else if (metric == MetricTag::Angular)
    base_aux = base.rowwise().norm();

  std::vector<std::vector<Neighbor>> result(nq);
  if (keep == 0) return result;

  const std::size_t num_blocks = (nq + kQueryBlock - 1) / kQueryBlock;
  parallel_for(0, num_blocks, [&](std::size_t block) {
    const auto q0 = static_cast<Eigen::Index>(block) * kQueryBlock;
    const Eigen::Index qb = std::min<Eigen::Index>(kQueryBlock, static_cast<Eigen::Index>(nq) - q0);
    std::vector<std::priority_queue<Scored>> heaps(static_cast<std::size_t>(qb));
    Eigen::MatrixXf gram;
    for (Eigen::Index b0 = 0; b0 < static_cast<Eigen::Index>(nb); b0 += kBaseBlock) {
      const Eigen::Index bb = std::min<Eigen::Index>(kBaseBlock, static_cast<Eigen::Index>(nb) - b0);
      gram.noalias() = queries.middleRows(q0, qb) * base.middleRows(b0, bb).transpose();
      for (Eigen::Index qi = 0; qi < qb; ++qi) {
        auto& heap = heaps[static_cast<std::size_t>(qi)];
        const auto self = static_cast<std::size_t>(q0 + qi);
        for (Eigen::Index bj = 0; bj < bb; ++bj) {
          const auto id = static_cast<PointId>(b0 + bj);
          if (exclude_self && id == self) continue;
          const float dot = gram(qi, bj);
          float score = 0.0F;
          switch (metric) {
            case MetricTag::L2:
            case MetricTag::Hamming: score = base_aux[b0 + bj] - 2.0F * dot; break;
            case MetricTag::InnerProduct: score = -dot; break;
            case MetricTag::Angular: {
              const float norm = base_aux[b0 + bj];
              score = norm > 0.0F ? -dot / norm : 0.0F;
              break;
            }
          }
          const Scored s{score, id};
          if (heap.size() < shortlist) {
            heap.push(s);
          } else if (s < heap.top()) {
            heap.pop();
            heap.push(s);
          }
        }
      }
    }
    for (Eigen::Index qi = 0; qi < qb; ++qi) {
      auto& heap = heaps[static_cast<std::size_t>(qi)];
      const auto q = queries.row(q0 + qi);
      std::vector<Neighbor> exact;
      exact.reserve(heap.size());
      while (!heap.empty()) {
        const PointId id = heap.top().id;
        heap.pop();
        exact.push_back({distance(metric, q, base.row(id)), id});
      }
      std::sort(exact.begin(), exact.end());
      exact.resize(keep);
      result[static_cast<std::size_t>(q0 + qi)] = std::move(exact);
    }
  });
  return result;
}

GroundTruth compute_ground_truth(const Dataset& data, const Dataset& queries, std::size_t k) {
  if (queries.dim() != data.dim()) throw InputError("compute_ground_truth: dimension mismatch");
  if (k == 0 || k > data.size()) throw InputError("compute_ground_truth: need 1 <= k <= n");
  auto lists = exact_knn(data.values(), queries.values(), data.metric(), k, false);
  GroundTruth gt;
  gt.ids.resize(static_cast<Eigen::Index>(queries.size()), static_cast<Eigen::Index>(k));
  gt.distances.resize(gt.ids.rows(), gt.ids.cols());
  for (std::size_t q = 0; q < lists.size(); ++q) {
    for (std::size_t j = 0; j < k; ++j) {
      gt.ids(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(j)) = lists[q][j].id;
      gt.distances(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(j)) = lists[q][j].distance;
    }
  }
  return gt;
}

double recall_at_k(std::span<const PointId> retrieved, std::span<const PointId> truth, std::size_t k) {
  if (k == 0) return 0.0;
  if (truth.size() < k) throw InputError("recall_at_k: truth shorter than k");
  std::vector<PointId> got(retrieved.begin(), retrieved.end());
  std::sort(got.begin(), got.end());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i)
    if (std::binary_search(got.begin(), got.end(), truth[i])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(k);
}

}  // namespace shardann
