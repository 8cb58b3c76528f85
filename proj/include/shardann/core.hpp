#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shardann/error.hpp"

namespace shardann {

using PointId = std::uint32_t;
using ShardId = std::uint32_t;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixF = RowMatrix<float>;
using VectorF = Eigen::VectorXf;

enum class MetricTag : std::uint8_t { L2 = 0, InnerProduct = 1, Angular = 2, Hamming = 3 };

std::string_view to_string(MetricTag metric);
MetricTag parse_metric(std::string_view name);

/// n points of dimension d stored row-major, plus the metric they are compared with.
template <typename Scalar>
class BasicDataset {
 public:
  using Matrix = RowMatrix<Scalar>;

  BasicDataset() = default;
  BasicDataset(Matrix values, MetricTag metric) : values_(std::move(values)), metric_(metric) {
    validate();
  }

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(values_.rows()); }
  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(values_.cols()); }
  [[nodiscard]] MetricTag metric() const { return metric_; }
  [[nodiscard]] const Matrix& values() const { return values_; }
  [[nodiscard]] auto row(std::size_t i) const { return values_.row(static_cast<Eigen::Index>(i)); }

  /// Rows `ids` copied into a new dataset with the same metric.
  [[nodiscard]] BasicDataset subset(std::span<const PointId> ids) const {
    Matrix out(static_cast<Eigen::Index>(ids.size()), values_.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = values_.row(ids[i]);
    return BasicDataset(std::move(out), metric_);
  }

  friend bool operator==(const BasicDataset& a, const BasicDataset& b) {
    return a.metric_ == b.metric_ && a.values_.rows() == b.values_.rows() &&
           a.values_.cols() == b.values_.cols() && a.values_ == b.values_;
  }

 private:
  void validate() const {
    if (values_.rows() < 1 || values_.cols() < 1) throw InputError("dataset needs n >= 1 and d >= 1");
    if (!values_.allFinite()) throw InputError("dataset contains non-finite coordinates");
    if (metric_ == MetricTag::Hamming &&
        !((values_.array() == Scalar(0)) || (values_.array() == Scalar(1))).all())
      throw InputError("Hamming datasets must be 0/1 valued");
  }

  Matrix values_;
  MetricTag metric_ = MetricTag::L2;
};

using Dataset = BasicDataset<float>;

/// Distance under `metric`; smaller means more similar for every metric.
/// InnerProduct is returned negated, Angular is 1 - cosine (0-norm inputs
/// count as cosine 0), Hamming counts differing coordinates.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar distance(MetricTag metric, const Eigen::MatrixBase<DerivedX>& x,
                                   const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  if (x.size() != y.size()) throw InputError("distance: dimension mismatch");
  switch (metric) {
    case MetricTag::L2:
      return std::sqrt((x - y).squaredNorm());
    case MetricTag::InnerProduct:
      return -x.dot(y);
    case MetricTag::Angular: {
      const Scalar denom = x.norm() * y.norm();
      if (denom == Scalar(0)) return Scalar(1);
      return Scalar(1) - x.dot(y) / denom;
    }
    case MetricTag::Hamming:
      return static_cast<Scalar>((x.array() != y.array()).count());
  }
  return Scalar(0);
}

/// Point id with its distance; ordered by (distance, id) everywhere.
struct Neighbor {
  float distance = 0.0F;
  PointId id = 0;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
  }
  friend bool operator==(const Neighbor& a, const Neighbor& b) = default;
};

/// Retrieved point with the shard it was retrieved from.
struct Candidate {
  PointId point = 0;
  ShardId shard = 0;
  float distance = 0.0F;
};

/// Per-query exact top-k ids and distances, both nq x k row-major.
struct GroundTruth {
  RowMatrix<PointId> ids;
  RowMatrixF distances;

  [[nodiscard]] std::size_t num_queries() const { return static_cast<std::size_t>(ids.rows()); }
  [[nodiscard]] std::size_t k() const { return static_cast<std::size_t>(ids.cols()); }
  [[nodiscard]] std::span<const PointId> neighbors(std::size_t q) const {
    return {ids.data() + q * k(), k()};
  }
};

/// Exact k nearest neighbors of every row of `queries` among the rows of
/// `base`, sorted by (distance, id). With `exclude_self`, row i of the
/// queries is taken to be base point i and is skipped. Scores come from a
/// blocked matrix product and are re-ranked with `distance`, so results
/// equal a brute-force scan that uses `distance` directly.
std::vector<std::vector<Neighbor>> exact_knn(const RowMatrixF& base, const RowMatrixF& queries,
                                             MetricTag metric, std::size_t k, bool exclude_self);

GroundTruth compute_ground_truth(const Dataset& data, const Dataset& queries, std::size_t k);

double recall_at_k(std::span<const PointId> retrieved, std::span<const PointId> truth, std::size_t k);

}  // namespace shardann
