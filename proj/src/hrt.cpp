#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "shardann/parallel.hpp"
#include "shardann/random.hpp"
#include "shardann/routing.hpp"

namespace shardann {

std::string_view to_string(LshFamilyTag family) {
  switch (family) {
    case LshFamilyTag::BitSampling: return "bits";
    case LshFamilyTag::Hyperplane: return "hyperplane";
    case LshFamilyTag::StableProjection: return "stable";
    case LshFamilyTag::Constant: return "constant";
  }
  return "unknown";
}

LshFamilyTag parse_family(std::string_view name) {
  if (name == "bits" || name == "bit-sampling") return LshFamilyTag::BitSampling;
  if (name == "hyperplane" || name == "simhash") return LshFamilyTag::Hyperplane;
  if (name == "stable" || name == "p-stable") return LshFamilyTag::StableProjection;
  if (name == "constant") return LshFamilyTag::Constant;
  throw InputError("unknown LSH family: " + std::string(name));
}

LshFamilyTag default_family(MetricTag metric) {
  switch (metric) {
    case MetricTag::Hamming: return LshFamilyTag::BitSampling;
    case MetricTag::Angular:
    case MetricTag::InnerProduct: return LshFamilyTag::Hyperplane;
    case MetricTag::L2: return LshFamilyTag::StableProjection;
  }
  return LshFamilyTag::StableProjection;
}

bool family_supports(LshFamilyTag family, MetricTag metric) {
  switch (family) {
    case LshFamilyTag::BitSampling: return metric == MetricTag::Hamming;
    case LshFamilyTag::Hyperplane: return metric == MetricTag::Angular || metric == MetricTag::InnerProduct;
    case LshFamilyTag::StableProjection: return metric == MetricTag::L2 || metric == MetricTag::Hamming;
    case LshFamilyTag::Constant: return true;
  }
  return false;
}

std::size_t LshFunctions::length() const {
  switch (family) {
    case LshFamilyTag::BitSampling: return coordinates.size();
    case LshFamilyTag::Hyperplane:
    case LshFamilyTag::StableProjection: return static_cast<std::size_t>(projections.rows());
    case LshFamilyTag::Constant: return coordinates.size();
  }
  return 0;
}

void LshFunctions::hash(const Eigen::Ref<const Eigen::RowVectorXf>& x, std::span<std::int32_t> key) const {
  switch (family) {
    case LshFamilyTag::BitSampling:
      for (std::size_t j = 0; j < coordinates.size(); ++j) key[j] = x[coordinates[j]] != 0.0F ? 1 : 0;
      break;
    case LshFamilyTag::Hyperplane:
      for (Eigen::Index j = 0; j < projections.rows(); ++j) key[static_cast<std::size_t>(j)] = projections.row(j).dot(x) >= 0.0F ? 1 : 0;
      break;
    case LshFamilyTag::StableProjection:
      for (Eigen::Index j = 0; j < projections.rows(); ++j)
        key[static_cast<std::size_t>(j)] = static_cast<std::int32_t>(std::floor((projections.row(j).dot(x) + offsets[j]) / width));
      break;
    case LshFamilyTag::Constant:
      std::fill(key.begin(), key.end(), 0);
      break;
  }
}

bool operator==(const LshFunctions& a, const LshFunctions& b) {
  return a.family == b.family && a.coordinates == b.coordinates && a.width == b.width &&
         a.projections.rows() == b.projections.rows() && a.projections.cols() == b.projections.cols() &&
         (a.projections.array() == b.projections.array()).all() && a.offsets.size() == b.offsets.size() &&
         (a.offsets.array() == b.offsets.array()).all();
}

HrtIndex::HrtIndex(HrtParams params, MetricTag metric, std::size_t num_shards, RowMatrixF samples,
                   std::vector<PointId> sample_points, std::vector<ShardId> sample_shards, std::vector<Repetition> reps)
    : params_(params),
      metric_(metric),
      num_shards_(num_shards),
      samples_(std::move(samples)),
      sample_points_(std::move(sample_points)),
      sample_shards_(std::move(sample_shards)),
      reps_(std::move(reps)) {
  const std::size_t count = sample_points_.size();
  if (static_cast<std::size_t>(samples_.rows()) != count || sample_shards_.size() != count)
    throw InputError("HrtIndex: sample arrays disagree in length");
  for (ShardId s : sample_shards_)
    if (s >= num_shards_) throw InputError("HrtIndex: sample shard out of range");
  for (const auto& rep : reps_) {
    if (rep.entries.size() != count || static_cast<std::size_t>(rep.keys.rows()) != count)
      throw InputError("HrtIndex: repetition size mismatch");
    for (std::uint32_t e : rep.entries)
      if (e >= count) throw InputError("HrtIndex: entry out of range");
  }
}

bool operator==(const HrtIndex& a, const HrtIndex& b) {
  if (a.metric_ != b.metric_ || a.num_shards_ != b.num_shards_ || a.sample_points_ != b.sample_points_ ||
      a.sample_shards_ != b.sample_shards_ || a.reps_.size() != b.reps_.size() ||
      a.samples_.rows() != b.samples_.rows() || a.samples_.cols() != b.samples_.cols() ||
      !(a.samples_.array() == b.samples_.array()).all())
    return false;
  for (std::size_t r = 0; r < a.reps_.size(); ++r) {
    const auto& x = a.reps_[r];
    const auto& y = b.reps_[r];
    if (!(x.functions == y.functions) || x.entries != y.entries || x.keys.rows() != y.keys.rows() ||
        x.keys.cols() != y.keys.cols() || !(x.keys.array() == y.keys.array()).all())
      return false;
  }
  return true;
}

namespace {

float median_pairwise_distance(const RowMatrixF& samples, MetricTag metric, Rng& rng) {
  const auto count = static_cast<std::uint32_t>(samples.rows());
  const auto picks = sample_without_replacement(rng, count, std::min<std::uint32_t>(count, 1000));
  std::vector<float> dists;
  dists.reserve(picks.size() * picks.size() / 2);
  for (std::size_t i = 0; i < picks.size(); ++i)
    for (std::size_t j = i + 1; j < picks.size(); ++j)
      dists.push_back(distance(metric, samples.row(picks[i]), samples.row(picks[j])));
  if (dists.empty()) return 1.0F;
  auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  return *mid > 0.0F ? *mid : 1.0F;
}

LshFunctions draw_functions(LshFamilyTag family, std::size_t tokens, std::size_t dim, float width, Rng& rng) {
  LshFunctions f;
  f.family = family;
  switch (family) {
    case LshFamilyTag::BitSampling:
      f.coordinates.resize(tokens);
      for (auto& c : f.coordinates) c = static_cast<std::uint32_t>(uniform_index(rng, dim));
      break;
    case LshFamilyTag::Hyperplane:
    case LshFamilyTag::StableProjection:
      f.projections.resize(static_cast<Eigen::Index>(tokens), static_cast<Eigen::Index>(dim));
      for (Eigen::Index i = 0; i < f.projections.size(); ++i)
        f.projections.data()[i] = static_cast<float>(standard_normal(rng));
      if (family == LshFamilyTag::StableProjection) {
        f.width = width;
        f.offsets.resize(static_cast<Eigen::Index>(tokens));
        for (Eigen::Index i = 0; i < f.offsets.size(); ++i) f.offsets[i] = static_cast<float>(uniform_unit(rng) * width);
      }
      break;
    case LshFamilyTag::Constant:
      f.coordinates.assign(tokens, 0);
      break;
  }
  return f;
}

bool key_less(const std::int32_t* a, const std::int32_t* b, std::size_t t) {
  return std::lexicographical_compare(a, a + t, b, b + t);
}

}  // namespace

HrtIndex hrt_train(const Dataset& data, const Partition& p, const HrtParams& params, std::uint64_t seed) {
  const std::size_t n = data.size();
  if (p.size() != n) throw InputError("hrt_train: dataset/partition size mismatch");
  if (params.index_size == 0 || params.index_size > n) throw InputError("hrt_train: need 1 <= m <= n");
  if (params.repetitions < 1 || params.tokens < 1) throw InputError("hrt_train: need r >= 1 and t >= 1");
  if (!family_supports(params.family, data.metric()))
    throw InputError("hrt_train: LSH family " + std::string(to_string(params.family)) + " does not fit metric " +
                     std::string(to_string(data.metric())));

  const auto members = p.shard_members();
  std::vector<PointId> sample_points;
  std::vector<ShardId> sample_shards;
  for (std::size_t shard = 0; shard < members.size(); ++shard) {
    const auto& list = members[shard];
    const auto quota = static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(params.index_size) * list.size()) / n);
    auto rng = make_rng(seed, {0x687274, shard});
    for (std::uint32_t pos : sample_without_replacement(rng, static_cast<std::uint32_t>(list.size()), quota)) {
      sample_points.push_back(list[pos]);
      sample_shards.push_back(static_cast<ShardId>(shard));
    }
  }
  if (sample_points.empty()) throw InputError("hrt_train: index size too small to sample any point");
  RowMatrixF samples = data.subset(sample_points).values();
  const std::size_t count = sample_points.size();
  const std::size_t t = params.tokens;

  float width = params.width;
  if (params.family == LshFamilyTag::StableProjection && width <= 0.0F) {
    auto rng = make_rng(seed, {0x687274, 0x77});
    width = median_pairwise_distance(samples, data.metric(), rng);
  }

  std::vector<HrtIndex::Repetition> reps(params.repetitions);
  parallel_for(0, params.repetitions, [&](std::size_t r) {
    auto rng = make_rng(seed, {0x687274, 0x72, r});
    auto& rep = reps[r];
    rep.functions = draw_functions(params.family, t, data.dim(), width, rng);
    RowMatrix<std::int32_t> raw(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(t));
    for (std::size_t i = 0; i < count; ++i)
      rep.functions.hash(samples.row(static_cast<Eigen::Index>(i)), {raw.data() + i * t, t});
    rep.entries.resize(count);
    std::iota(rep.entries.begin(), rep.entries.end(), 0U);
    std::sort(rep.entries.begin(), rep.entries.end(), [&](std::uint32_t a, std::uint32_t b) {
      const std::int32_t* ka = raw.data() + static_cast<std::size_t>(a) * t;
      const std::int32_t* kb = raw.data() + static_cast<std::size_t>(b) * t;
      if (key_less(ka, kb, t)) return true;
      if (key_less(kb, ka, t)) return false;
      if (sample_points[a] != sample_points[b]) return sample_points[a] < sample_points[b];
      return sample_shards[a] < sample_shards[b];
    });
    rep.keys.resize(raw.rows(), raw.cols());
    for (std::size_t i = 0; i < count; ++i) rep.keys.row(static_cast<Eigen::Index>(i)) = raw.row(rep.entries[i]);
  });

  HrtParams stored = params;
  stored.width = width;
  return HrtIndex(stored, data.metric(), p.num_shards(), std::move(samples), std::move(sample_points),
                  std::move(sample_shards), std::move(reps));
}

CandidateSet hrt_route(const HrtIndex& index, const Eigen::Ref<const Eigen::RowVectorXf>& q, std::size_t window) {
  if (window < 1) throw InputError("hrt_route: window must be >= 1");
  if (q.size() != index.samples().cols()) throw InputError("hrt_route: query dimension mismatch");
  CandidateSet out;
  const std::size_t count = index.sample_count();
  if (count == 0) return out;
  const std::size_t t = index.params().tokens;
  std::vector<std::int32_t> key(t);
  std::unordered_set<std::uint32_t> seen;
  for (const auto& rep : index.repetitions()) {
    rep.functions.hash(q, key);
    std::size_t lo = 0;
    std::size_t hi = count;
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (key_less(rep.keys.data() + mid * t, key.data(), t)) lo = mid + 1; else hi = mid;
    }
    const std::size_t tau = std::min(lo, count - 1);
    const std::size_t first = tau >= window ? tau - window : 0;
    const std::size_t last = std::min(count - 1, tau + window);
    for (std::size_t pos = first; pos <= last; ++pos) {
      const std::uint32_t entry = rep.entries[pos];
      if (!seen.insert(entry).second) continue;
      const float d = distance(index.metric(), q, index.samples().row(entry));
      ++out.distance_computations;
      out.candidates.push_back({index.sample_points()[entry], index.sample_shards()[entry], d});
    }
  }
  return out;
}

std::string_view to_string(AggregationMode mode) {
  return mode == AggregationMode::Ranking ? "ranking" : "voting";
}

AggregationMode parse_aggregation(std::string_view name) {
  if (name == "ranking") return AggregationMode::Ranking;
  if (name == "voting") return AggregationMode::Voting;
  throw InputError("unknown aggregation mode: " + std::string(name));
}

ProbeOrder aggregate_probe_order(std::span<const Candidate> candidates, AggregationMode mode,
                                 std::size_t num_shards, MetricTag metric) {
  std::vector<double> score(num_shards, std::numeric_limits<double>::infinity());
  for (const Candidate& c : candidates)
    if (c.shard >= num_shards) throw InputError("aggregate_probe_order: candidate shard out of range");
  if (candidates.empty()) return order_by_score(score);

  if (mode == AggregationMode::Ranking) {
    for (const Candidate& c : candidates) score[c.shard] = std::min(score[c.shard], static_cast<double>(c.distance));
    return order_by_score(score);
  }

  double shift = 0.0;
  if (metric == MetricTag::InnerProduct) {
    shift = std::numeric_limits<double>::infinity();
    for (const Candidate& c : candidates) shift = std::min(shift, static_cast<double>(c.distance));
  }
  double max_sq = 0.0;
  for (const Candidate& c : candidates) {
    const double d = static_cast<double>(c.distance) - shift;
    max_sq = std::max(max_sq, d * d);
  }
  const double sigma = max_sq > 0.0 ? 12.0 / max_sq : 0.0;
  std::vector<double> votes(num_shards, 0.0);
  std::vector<bool> seen(num_shards, false);
  for (const Candidate& c : candidates) {
    const double d = static_cast<double>(c.distance) - shift;
    votes[c.shard] += std::exp(-sigma * d * d);
    seen[c.shard] = true;
  }
  for (std::size_t s = 0; s < num_shards; ++s)
    if (seen[s]) score[s] = -votes[s];
  return order_by_score(score);
}

}  // namespace shardann
