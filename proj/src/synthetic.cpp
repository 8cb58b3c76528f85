#include "shardann/synthetic.hpp"

#include "shardann/parallel.hpp"
#include "shardann/random.hpp"

namespace shardann {

Dataset sift_like(std::size_t n, std::uint64_t seed, const SiftLikeParams& params) {
  if (n == 0 || params.dim == 0 || params.components == 0) throw InputError("sift_like: empty shape");
  const auto d = static_cast<Eigen::Index>(params.dim);
  const auto r = static_cast<Eigen::Index>(params.rank);
  const auto c = static_cast<Eigen::Index>(params.components);

  auto layout = make_rng(params.layout_seed, {0});
  RowMatrixF centers(c, d);
  for (Eigen::Index i = 0; i < centers.size(); ++i)
    centers.data()[i] = static_cast<float>(standard_normal(layout)) * params.center_spread;
  std::vector<RowMatrixF> bases(static_cast<std::size_t>(c), RowMatrixF(r, d));
  for (auto& basis : bases)
    for (Eigen::Index i = 0; i < basis.size(); ++i)
      basis.data()[i] = static_cast<float>(standard_normal(layout)) * params.within_scale /
                        std::sqrt(static_cast<float>(d));

  RowMatrixF values(static_cast<Eigen::Index>(n), d);
  parallel_for(0, n, [&](std::size_t i) {
    auto rng = make_rng(seed, {0x5349, i});
    const auto comp = static_cast<std::size_t>(uniform_index(rng, static_cast<std::uint64_t>(c)));
    Eigen::RowVectorXf z(r);
    for (Eigen::Index j = 0; j < r; ++j) z[j] = static_cast<float>(standard_normal(rng));
    Eigen::RowVectorXf x = centers.row(static_cast<Eigen::Index>(comp)) + z * bases[comp];
    for (Eigen::Index j = 0; j < d; ++j) {
      const float v = x[j] + params.noise * static_cast<float>(standard_normal(rng)) + params.offset;
      values(static_cast<Eigen::Index>(i), j) = v > 0.0F ? v : 0.0F;
    }
  });
  return Dataset(std::move(values), MetricTag::L2);
}

Dataset gaussian_blobs(const RowMatrixF& centers, std::size_t n, float sigma, std::uint64_t seed, MetricTag metric) {
  if (centers.rows() == 0) throw InputError("gaussian_blobs: no centers");
  RowMatrixF values(static_cast<Eigen::Index>(n), centers.cols());
  auto rng = make_rng(seed, {0x626c});
  for (std::size_t i = 0; i < n; ++i) {
    const auto blob = static_cast<Eigen::Index>(i % static_cast<std::size_t>(centers.rows()));
    for (Eigen::Index j = 0; j < centers.cols(); ++j)
      values(static_cast<Eigen::Index>(i), j) = centers(blob, j) + sigma * static_cast<float>(standard_normal(rng));
  }
  return Dataset(std::move(values), metric);
}

Dataset uniform_cube(std::size_t n, std::size_t dim, std::uint64_t seed, MetricTag metric) {
  RowMatrixF values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  auto rng = make_rng(seed, {0x7563});
  for (Eigen::Index i = 0; i < values.size(); ++i) values.data()[i] = static_cast<float>(uniform_unit(rng));
  return Dataset(std::move(values), metric);
}

Dataset random_hypercube(std::size_t n, std::size_t bits, std::uint64_t seed) {
  RowMatrixF values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(bits));
  auto rng = make_rng(seed, {0x6863});
  for (Eigen::Index i = 0; i < values.size(); ++i) values.data()[i] = static_cast<float>(rng() >> 63);
  return Dataset(std::move(values), MetricTag::Hamming);
}

Dataset perturbed_hypercube_queries(const Dataset& data, std::size_t count, std::size_t flips, std::uint64_t seed) {
  if (data.metric() != MetricTag::Hamming) throw InputError("perturbed_hypercube_queries: Hamming data required");
  if (flips > data.dim()) throw InputError("perturbed_hypercube_queries: more flips than bits");
  RowMatrixF values(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(data.dim()));
  auto rng = make_rng(seed, {0x7071});
  for (std::size_t q = 0; q < count; ++q) {
    const auto src = uniform_index(rng, data.size());
    values.row(static_cast<Eigen::Index>(q)) = data.row(src);
    for (std::uint32_t bit : sample_without_replacement(rng, static_cast<std::uint32_t>(data.dim()),
                                                        static_cast<std::uint32_t>(flips)))
      values(static_cast<Eigen::Index>(q), bit) = 1.0F - values(static_cast<Eigen::Index>(q), bit);
  }
  return Dataset(std::move(values), MetricTag::Hamming);
}

}  // namespace shardann
