#pragma once

#include <cstdint>

#include "shardann/core.hpp"

namespace shardann {

/// Gaussian mixture with low-rank structure inside each component,
/// nonnegative like local image descriptors. Points and queries drawn with
/// different seeds come from the same distribution.
struct SiftLikeParams {
  std::size_t dim = 128;
  std::size_t components = 96;
  std::size_t rank = 12;
  float center_spread = 4.0F;
  float within_scale = 12.0F;
  float noise = 6.0F;
  float offset = 60.0F;
  std::uint64_t layout_seed = 0x51f7;  // fixes the components shared by data and queries
};

Dataset sift_like(std::size_t n, std::uint64_t seed, const SiftLikeParams& params = {});

/// Isotropic blobs around the given centers; point i belongs to blob i % centers.
Dataset gaussian_blobs(const RowMatrixF& centers, std::size_t n, float sigma, std::uint64_t seed,
                       MetricTag metric = MetricTag::L2);

Dataset uniform_cube(std::size_t n, std::size_t dim, std::uint64_t seed, MetricTag metric = MetricTag::L2);

/// Uniform random points of the d-bit hypercube.
Dataset random_hypercube(std::size_t n, std::size_t bits, std::uint64_t seed);

/// Copies of randomly chosen rows of `data` with `flips` distinct bits flipped.
Dataset perturbed_hypercube_queries(const Dataset& data, std::size_t count, std::size_t flips, std::uint64_t seed);

}  // namespace shardann
