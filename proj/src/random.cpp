#include "shardann/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "shardann/error.hpp"

namespace shardann {

double standard_normal(Rng& rng) {
  double u1 = uniform_unit(rng);
  while (u1 <= 0.0) u1 = uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::vector<std::uint32_t> sample_without_replacement(Rng& rng, std::uint32_t n,
                                                      std::uint32_t count) {
  if (count > n) throw InputError("sample_without_replacement: count exceeds population");
  std::vector<std::uint32_t> out;
  out.reserve(count);
  if (static_cast<std::uint64_t>(count) * 4 >= n) {
    std::vector<std::uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0U);
    for (std::uint32_t i = 0; i < count; ++i) {
      const auto j = i + static_cast<std::uint32_t>(uniform_index(rng, n - i));
      std::swap(pool[i], pool[j]);
    }
    out.assign(pool.begin(), pool.begin() + count);
  } else {
    // Floyd's algorithm.
    std::unordered_set<std::uint32_t> chosen;
    chosen.reserve(count * 2);
    for (std::uint32_t j = n - count; j < n; ++j) {
      const auto t = static_cast<std::uint32_t>(uniform_index(rng, static_cast<std::uint64_t>(j) + 1));
      const std::uint32_t pick = chosen.insert(t).second ? t : j;
      if (pick == j) chosen.insert(j);
      out.push_back(pick);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace shardann
