#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "shardann/core.hpp"
#include "shardann/partition.hpp"

namespace shardann {

/// Ranked permutation of all shard ids with a score per shard. Shards a
/// router never encountered come last in ascending id with an infinite
/// (worst) score.
struct ProbeOrder {
  std::vector<ShardId> shards;
  std::vector<double> scores;

  [[nodiscard]] std::size_t size() const { return shards.size(); }
  friend bool operator==(const ProbeOrder&, const ProbeOrder&) = default;
};

/// Ascending score order, ties by shard id.
ProbeOrder order_by_score(std::span<const double> score_per_shard);

// ---------------------------------------------------------------------------
// k-means tree routing

struct KmrParams {
  std::size_t centroids_per_node = 64;  // l
  std::size_t index_size = 50000;       // m
  std::size_t cluster_threshold = 350;  // lambda
  std::size_t kmeans_rounds = 10;
};

/// Per-shard hierarchical k-means trees over the shard's points. Only
/// centroids are stored; leaf points are not.
class KmrTree {
 public:
  struct Node {
    ShardId shard = 0;
    RowMatrixF centroids;
    std::vector<std::int32_t> children;  // parallel to centroid rows, -1 for none
  };

  KmrTree() = default;
  KmrTree(KmrParams params, MetricTag metric, std::size_t dim, std::vector<std::int32_t> roots,
          std::vector<Node> nodes);

  [[nodiscard]] const KmrParams& params() const { return params_; }
  [[nodiscard]] MetricTag metric() const { return metric_; }
  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] std::size_t num_shards() const { return roots_.size(); }
  [[nodiscard]] const std::vector<std::int32_t>& roots() const { return roots_; }
  [[nodiscard]] const std::vector<Node>& nodes() const { return nodes_; }
  [[nodiscard]] std::size_t total_centroids() const;

  friend bool operator==(const KmrTree& a, const KmrTree& b);

 private:
  KmrParams params_;
  MetricTag metric_ = MetricTag::L2;
  std::size_t dim_ = 0;
  std::vector<std::int32_t> roots_;
  std::vector<Node> nodes_;
};

KmrTree kmr_train(const Dataset& data, const Partition& p, const KmrParams& params, std::uint64_t seed);

/// Best-first search over all shard trees, popping at most `budget` nodes.
ProbeOrder kmr_route(const KmrTree& tree, const Eigen::Ref<const Eigen::RowVectorXf>& q, std::size_t budget = 50000);

/// Ranks shards by their closest centroid over the whole tree (no budget).
ProbeOrder kmr_route_exhaustive(const KmrTree& tree, const Eigen::Ref<const Eigen::RowVectorXf>& q);

// ---------------------------------------------------------------------------
// SortingLSH routing

enum class LshFamilyTag : std::uint8_t { BitSampling = 0, Hyperplane = 1, StableProjection = 2, Constant = 3 };

std::string_view to_string(LshFamilyTag family);
LshFamilyTag parse_family(std::string_view name);
/// Family used when none is requested: bit sampling for Hamming, hyperplanes
/// for angular and inner product, stable projections for L2.
LshFamilyTag default_family(MetricTag metric);
bool family_supports(LshFamilyTag family, MetricTag metric);

/// t hash functions drawn from one family; a point's key is the t-tuple of
/// integer tokens.
struct LshFunctions {
  LshFamilyTag family = LshFamilyTag::Constant;
  std::vector<std::uint32_t> coordinates;  // bit sampling
  RowMatrixF projections;                  // t x d, hyperplane / stable
  Eigen::VectorXf offsets;                 // stable
  float width = 1.0F;                      // stable

  [[nodiscard]] std::size_t length() const;
  void hash(const Eigen::Ref<const Eigen::RowVectorXf>& x, std::span<std::int32_t> key) const;
  friend bool operator==(const LshFunctions& a, const LshFunctions& b);
};

struct HrtParams {
  std::size_t index_size = 0;  // m
  std::size_t repetitions = 8;  // r
  std::size_t tokens = 24;      // t
  LshFamilyTag family = LshFamilyTag::StableProjection;
  float width = 0.0F;           // stable projection bucket width; 0 picks the median pairwise distance
};

/// Per repetition, the sampled points sorted lexicographically by key.
class HrtIndex {
 public:
  struct Repetition {
    LshFunctions functions;
    RowMatrix<std::int32_t> keys;        // sorted, one row per entry
    std::vector<std::uint32_t> entries;  // sample row of each sorted position
  };

  HrtIndex() = default;
  HrtIndex(HrtParams params, MetricTag metric, std::size_t num_shards, RowMatrixF samples,
           std::vector<PointId> sample_points, std::vector<ShardId> sample_shards, std::vector<Repetition> reps);

  [[nodiscard]] const HrtParams& params() const { return params_; }
  [[nodiscard]] MetricTag metric() const { return metric_; }
  [[nodiscard]] std::size_t num_shards() const { return num_shards_; }
  [[nodiscard]] std::size_t sample_count() const { return sample_points_.size(); }
  [[nodiscard]] const RowMatrixF& samples() const { return samples_; }
  [[nodiscard]] const std::vector<PointId>& sample_points() const { return sample_points_; }
  [[nodiscard]] const std::vector<ShardId>& sample_shards() const { return sample_shards_; }
  [[nodiscard]] const std::vector<Repetition>& repetitions() const { return reps_; }

  friend bool operator==(const HrtIndex& a, const HrtIndex& b);

 private:
  HrtParams params_;
  MetricTag metric_ = MetricTag::L2;
  std::size_t num_shards_ = 0;
  RowMatrixF samples_;
  std::vector<PointId> sample_points_;
  std::vector<ShardId> sample_shards_;
  std::vector<Repetition> reps_;
};

struct CandidateSet {
  std::vector<Candidate> candidates;
  std::size_t distance_computations = 0;
};

HrtIndex hrt_train(const Dataset& data, const Partition& p, const HrtParams& params, std::uint64_t seed);

/// Collects the window [tau - W, tau + W] around the lower-bound position of
/// the query key in every repetition. Entries are deduplicated by (point,
/// shard), so at most r * (2W + 1) distances are computed.
CandidateSet hrt_route(const HrtIndex& index, const Eigen::Ref<const Eigen::RowVectorXf>& q, std::size_t window);

enum class AggregationMode : std::uint8_t { Ranking = 0, Voting = 1 };

std::string_view to_string(AggregationMode mode);
AggregationMode parse_aggregation(std::string_view name);

/// Accumulated candidate distances into a probe order: ranking by the closest
/// candidate per shard, or voting by sum of exp(-sigma d^2) with d^2 remapped
/// onto [0, 12]. Voting scores are stored negated so ascending order holds.
ProbeOrder aggregate_probe_order(std::span<const Candidate> candidates, AggregationMode mode,
                                 std::size_t num_shards, MetricTag metric);

}  // namespace shardann
