#include "shardann/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <type_traits>

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace shardann {

namespace {

constexpr std::uint32_t kPartitionMagic = 0x54524150;  // "PART"
constexpr std::uint32_t kProbeMagic = 0x424f5250;      // "PROB"
constexpr std::uint32_t kRouterMagic = 0x54524853;     // "SHRT"
constexpr std::uint32_t kRouterVersion = 1;

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  template <typename T>
  void put_array(const T* data, std::size_t count) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + count * sizeof(T));
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string name) : bytes_(bytes), name_(std::move(name)) {}

  template <typename T>
  T get() {
    T value;
    get_array(&value, 1);
    return value;
  }
  template <typename T>
  void get_array(T* out, std::size_t count) {
    need(count, sizeof(T));
    std::memcpy(out, bytes_.data() + offset_, count * sizeof(T));
    offset_ += count * sizeof(T);
  }
  void need(std::size_t count, std::size_t size) const {
    if (count > (bytes_.size() - offset_) / size) fail("truncated input");
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(name_ + ": " + what + " at byte offset " + std::to_string(offset_));
  }
  [[nodiscard]] std::size_t offset() const { return offset_; }
  [[nodiscard]] bool done() const { return offset_ == bytes_.size(); }
  void expect_done() const {
    if (!done()) fail("trailing bytes");
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::string name_;
  std::size_t offset_ = 0;
};

template <typename Int>
Int checked_integer(float v, const char* what) {
  if (std::floor(v) != v || v < static_cast<float>(std::numeric_limits<Int>::min()) ||
      v > static_cast<float>(std::numeric_limits<Int>::max()))
    throw InputError(std::string("write_vectors: value not representable as ") + what);
  return static_cast<Int>(v);
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::uint8_t> bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size)))
    throw InputError("cannot read " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("cannot write " + path.string());
}

std::string_view to_string(VectorFormat format) {
  switch (format) {
    case VectorFormat::Fbin: return "fbin";
    case VectorFormat::Ibin: return "ibin";
    case VectorFormat::U8bin: return "u8bin";
    case VectorFormat::Fvecs: return "fvecs";
    case VectorFormat::Ivecs: return "ivecs";
  }
  return "unknown";
}

VectorFormat parse_vector_format(std::string_view name) {
  for (auto f : {VectorFormat::Fbin, VectorFormat::Ibin, VectorFormat::U8bin, VectorFormat::Fvecs, VectorFormat::Ivecs})
    if (to_string(f) == name) return f;
  throw InputError("unknown vector format: " + std::string(name));
}

VectorFormat format_for_path(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext.size() < 2) throw InputError("cannot infer vector format of " + path.string());
  return parse_vector_format(std::string_view(ext).substr(1));
}

RowMatrixF read_matrix(const std::filesystem::path& path, VectorFormat format) {
  const auto bytes = read_file(path);
  ByteReader in(bytes, path.string());
  RowMatrixF values;
  if (format == VectorFormat::Fvecs || format == VectorFormat::Ivecs) {
    std::vector<float> flat;
    std::int32_t dim = -1;
    std::size_t rows = 0;
    while (!in.done()) {
      const std::size_t at = in.offset();
      const auto d = in.get<std::int32_t>();
      if (d <= 0) in.fail("non-positive dimension");
      if (dim >= 0 && d != dim) {
        throw FormatError(path.string() + ": dimension " + std::to_string(d) + " differs from " +
                          std::to_string(dim) + " at byte offset " + std::to_string(at));
      }
      dim = d;
      const std::size_t old = flat.size();
      flat.resize(old + static_cast<std::size_t>(d));
      if (format == VectorFormat::Fvecs) {
        in.get_array(flat.data() + old, static_cast<std::size_t>(d));
      } else {
        std::vector<std::int32_t> tmp(static_cast<std::size_t>(d));
        in.get_array(tmp.data(), tmp.size());
        for (std::size_t j = 0; j < tmp.size(); ++j) flat[old + j] = static_cast<float>(tmp[j]);
      }
      ++rows;
    }
    if (rows == 0) in.fail("no vectors");
    values = Eigen::Map<RowMatrixF>(flat.data(), static_cast<Eigen::Index>(rows), dim);
    return values;
  }
  const auto n = in.get<std::uint32_t>();
  const auto d = in.get<std::uint32_t>();
  if (n == 0) in.fail("zero vector count");
  if (d == 0) in.fail("zero dimension");
  const std::size_t count = static_cast<std::size_t>(n) * d;
  values.resize(n, d);
  switch (format) {
    case VectorFormat::Fbin:
      in.get_array(values.data(), count);
      break;
    case VectorFormat::Ibin: {
      in.need(count, 4);
      std::vector<std::int32_t> tmp(count);
      in.get_array(tmp.data(), count);
      for (std::size_t i = 0; i < count; ++i) values.data()[i] = static_cast<float>(tmp[i]);
      break;
    }
    case VectorFormat::U8bin: {
      in.need(count, 1);
      std::vector<std::uint8_t> tmp(count);
      in.get_array(tmp.data(), count);
      for (std::size_t i = 0; i < count; ++i) values.data()[i] = static_cast<float>(tmp[i]);
      break;
    }
    default:
      break;
  }
  in.expect_done();
  return values;
}

Dataset read_vectors(const std::filesystem::path& path, VectorFormat format, MetricTag metric) {
  return Dataset(read_matrix(path, format), metric);
}

void write_vectors(const std::filesystem::path& path, VectorFormat format, const RowMatrixF& values) {
  if (values.rows() == 0 || values.cols() == 0) throw InputError("write_vectors: empty matrix");
  if (values.rows() > std::numeric_limits<std::uint32_t>::max() || values.cols() > std::numeric_limits<std::int32_t>::max())
    throw InputError("write_vectors: matrix too large for the header");
  ByteWriter out;
  const auto n = static_cast<std::uint32_t>(values.rows());
  const auto d = static_cast<std::uint32_t>(values.cols());
  const std::size_t count = static_cast<std::size_t>(n) * d;
  switch (format) {
    case VectorFormat::Fbin:
      out.put(n), out.put(d);
      out.put_array(values.data(), count);
      break;
    case VectorFormat::Ibin:
      out.put(n), out.put(d);
      for (std::size_t i = 0; i < count; ++i) out.put(checked_integer<std::int32_t>(values.data()[i], "int32"));
      break;
    case VectorFormat::U8bin:
      out.put(n), out.put(d);
      for (std::size_t i = 0; i < count; ++i) out.put(checked_integer<std::uint8_t>(values.data()[i], "uint8"));
      break;
    case VectorFormat::Fvecs:
    case VectorFormat::Ivecs:
      for (std::uint32_t i = 0; i < n; ++i) {
        out.put(static_cast<std::int32_t>(d));
        const float* row = values.data() + static_cast<std::size_t>(i) * d;
        if (format == VectorFormat::Fvecs) out.put_array(row, d);
        else
          for (std::uint32_t j = 0; j < d; ++j) out.put(checked_integer<std::int32_t>(row[j], "int32"));
      }
      break;
  }
  write_file(path, out.bytes());
}

void write_graph(const std::filesystem::path& path, const KnnGraph& graph) {
  ByteWriter out;
  out.put(static_cast<std::uint64_t>(graph.size()));
  out.put(static_cast<std::uint64_t>(graph.num_edges()));
  std::uint64_t offset = 0;
  out.put(offset);
  for (std::size_t u = 0; u < graph.size(); ++u) out.put(offset += graph.neighbors(u).size());
  for (std::size_t u = 0; u < graph.size(); ++u) out.put_array(graph.neighbors(u).data(), graph.neighbors(u).size());
  write_file(path, out.bytes());
}

KnnGraph read_graph(const std::filesystem::path& path, std::size_t degree_bound) {
  const auto bytes = read_file(path);
  ByteReader in(bytes, path.string());
  const auto n = in.get<std::uint64_t>();
  const auto edges = in.get<std::uint64_t>();
  if (n == 0) in.fail("empty graph");
  in.need(n + 1, 8);
  std::vector<std::uint64_t> offsets(n + 1);
  in.get_array(offsets.data(), offsets.size());
  if (offsets.front() != 0 || offsets.back() != edges) in.fail("offsets disagree with the edge count");
  for (std::size_t u = 0; u < n; ++u)
    if (offsets[u + 1] < offsets[u]) in.fail("decreasing offsets");
  in.need(edges, 4);
  std::vector<std::vector<PointId>> adjacency(n);
  std::size_t max_degree = 0;
  for (std::size_t u = 0; u < n; ++u) {
    adjacency[u].resize(offsets[u + 1] - offsets[u]);
    in.get_array(adjacency[u].data(), adjacency[u].size());
    max_degree = std::max(max_degree, adjacency[u].size());
  }
  in.expect_done();
  try {
    return KnnGraph(std::move(adjacency), degree_bound == 0 ? max_degree : degree_bound);
  } catch (const InputError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void export_partition(const Partition& p, const std::filesystem::path& path) {
  ByteWriter out;
  const bool overlapping = !p.is_disjoint();
  out.put(kPartitionMagic);
  out.put(static_cast<std::uint32_t>(p.size()));
  out.put(static_cast<std::uint32_t>(p.num_shards()));
  out.put(static_cast<std::uint32_t>(overlapping ? 1 : 0));
  if (!overlapping) {
    for (std::size_t u = 0; u < p.size(); ++u) out.put(static_cast<std::uint32_t>(p.shard_of(u)));
  } else {
    std::uint64_t offset = 0;
    out.put(offset);
    for (std::size_t u = 0; u < p.size(); ++u) out.put(offset += p.shards_of(u).size());
    for (std::size_t u = 0; u < p.size(); ++u) out.put_array(p.shards_of(u).data(), p.shards_of(u).size());
  }
  write_file(path, out.bytes());
}

Partition import_partition(const std::filesystem::path& path, double epsilon, std::size_t size_divisor) {
  const auto bytes = read_file(path);
  ByteReader in(bytes, path.string());
  if (in.get<std::uint32_t>() != kPartitionMagic) in.fail("bad magic");
  const auto n = in.get<std::uint32_t>();
  const auto s = in.get<std::uint32_t>();
  const auto flags = in.get<std::uint32_t>();
  if (n == 0 || s == 0) in.fail("empty partition header");
  if (flags > 1) in.fail("unknown flags");
  std::vector<std::vector<ShardId>> lists(n);
  if (flags == 0) {
    for (auto& list : lists) {
      const auto shard = in.get<std::uint32_t>();
      if (shard >= s) in.fail("shard id " + std::to_string(shard) + " >= " + std::to_string(s));
      list.push_back(shard);
    }
  } else {
    in.need(static_cast<std::size_t>(n) + 1, 8);
    std::vector<std::uint64_t> offsets(static_cast<std::size_t>(n) + 1);
    in.get_array(offsets.data(), offsets.size());
    if (offsets.front() != 0) in.fail("first offset not zero");
    for (std::size_t u = 0; u < n; ++u) {
      if (offsets[u + 1] <= offsets[u]) in.fail("node without shard");
      lists[u].resize(offsets[u + 1] - offsets[u]);
      in.get_array(lists[u].data(), lists[u].size());
      for (std::size_t j = 0; j < lists[u].size(); ++j) {
        if (lists[u][j] >= s) in.fail("shard id " + std::to_string(lists[u][j]) + " >= " + std::to_string(s));
        if (j > 0 && lists[u][j] <= lists[u][j - 1]) in.fail("shard list not strictly ascending");
      }
    }
  }
  in.expect_done();
  if (flags == 0) {
    std::vector<ShardId> labels(n);
    for (std::size_t u = 0; u < n; ++u) labels[u] = lists[u].front();
    return Partition::disjoint(std::move(labels), s, epsilon, size_divisor);
  }
  return Partition::overlapping(std::move(lists), s, epsilon, size_divisor == 0 ? s : size_divisor);
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& gt) {
  ByteWriter out;
  out.put(static_cast<std::uint32_t>(gt.num_queries()));
  out.put(static_cast<std::uint32_t>(gt.k()));
  out.put_array(gt.ids.data(), static_cast<std::size_t>(gt.ids.size()));
  out.put_array(gt.distances.data(), static_cast<std::size_t>(gt.distances.size()));
  write_file(path, out.bytes());
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  ByteReader in(bytes, path.string());
  const auto nq = in.get<std::uint32_t>();
  const auto k = in.get<std::uint32_t>();
  if (nq == 0 || k == 0) in.fail("empty ground truth header");
  GroundTruth gt;
  gt.ids.resize(nq, k);
  gt.distances.resize(nq, k);
  in.get_array(gt.ids.data(), static_cast<std::size_t>(gt.ids.size()));
  in.get_array(gt.distances.data(), static_cast<std::size_t>(gt.distances.size()));
  in.expect_done();
  return gt;
}

void write_probe_orders(const std::filesystem::path& path, std::span<const ProbeOrder> orders) {
  ByteWriter out;
  out.put(kProbeMagic);
  out.put(static_cast<std::uint32_t>(orders.size()));
  const std::size_t s = orders.empty() ? 0 : orders.front().size();
  out.put(static_cast<std::uint32_t>(s));
  for (const auto& o : orders) {
    if (o.size() != s || o.scores.size() != s) throw InputError("write_probe_orders: ragged probe orders");
    out.put_array(o.shards.data(), s);
    out.put_array(o.scores.data(), s);
  }
  write_file(path, out.bytes());
}

std::vector<ProbeOrder> read_probe_orders(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  ByteReader in(bytes, path.string());
  if (in.get<std::uint32_t>() != kProbeMagic) in.fail("bad magic");
  const auto nq = in.get<std::uint32_t>();
  const auto s = in.get<std::uint32_t>();
  if (nq > 0 && s == 0) in.fail("zero shard count");
  if (nq > 0) in.need(nq, static_cast<std::size_t>(s) * 12);
  std::vector<ProbeOrder> orders(nq);
  for (auto& o : orders) {
    o.shards.resize(s);
    o.scores.resize(s);
    in.get_array(o.shards.data(), s);
    in.get_array(o.scores.data(), s);
    std::vector<bool> seen(s, false);
    for (ShardId shard : o.shards) {
      if (shard >= s || seen[shard]) in.fail("probe order is not a permutation");
      seen[shard] = true;
    }
  }
  in.expect_done();
  return orders;
}

namespace {

void put_matrix(ByteWriter& out, const RowMatrixF& m) {
  out.put(static_cast<std::uint64_t>(m.rows()));
  out.put(static_cast<std::uint64_t>(m.cols()));
  out.put_array(m.data(), static_cast<std::size_t>(m.size()));
}

template <typename T>
void put_vector(ByteWriter& out, const std::vector<T>& v) {
  out.put(static_cast<std::uint64_t>(v.size()));
  out.put_array(v.data(), v.size());
}

RowMatrixF get_matrix(ByteReader& in) {
  const auto rows = in.get<std::uint64_t>();
  const auto cols = in.get<std::uint64_t>();
  if (cols != 0) in.need(rows, cols * 4);
  RowMatrixF m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  in.get_array(m.data(), static_cast<std::size_t>(m.size()));
  return m;
}

template <typename T>
std::vector<T> get_vector(ByteReader& in) {
  const auto size = in.get<std::uint64_t>();
  in.need(size, sizeof(T));
  std::vector<T> v(size);
  in.get_array(v.data(), v.size());
  return v;
}

void put_kmr(ByteWriter& out, const KmrTree& tree) {
  const auto& p = tree.params();
  out.put(static_cast<std::uint64_t>(p.centroids_per_node));
  out.put(static_cast<std::uint64_t>(p.index_size));
  out.put(static_cast<std::uint64_t>(p.cluster_threshold));
  out.put(static_cast<std::uint64_t>(p.kmeans_rounds));
  out.put(static_cast<std::uint32_t>(tree.metric()));
  out.put(static_cast<std::uint64_t>(tree.dim()));
  put_vector(out, tree.roots());
  out.put(static_cast<std::uint64_t>(tree.nodes().size()));
  for (const auto& node : tree.nodes()) {
    out.put(node.shard);
    put_matrix(out, node.centroids);
    put_vector(out, node.children);
  }
}

KmrTree get_kmr(ByteReader& in) {
  KmrParams p;
  p.centroids_per_node = in.get<std::uint64_t>();
  p.index_size = in.get<std::uint64_t>();
  p.cluster_threshold = in.get<std::uint64_t>();
  p.kmeans_rounds = in.get<std::uint64_t>();
  const auto metric = static_cast<MetricTag>(in.get<std::uint32_t>());
  const auto dim = in.get<std::uint64_t>();
  auto roots = get_vector<std::int32_t>(in);
  const auto count = in.get<std::uint64_t>();
  in.need(count, 28);
  std::vector<KmrTree::Node> nodes(count);
  for (auto& node : nodes) {
    node.shard = in.get<ShardId>();
    node.centroids = get_matrix(in);
    node.children = get_vector<std::int32_t>(in);
  }
  return KmrTree(p, metric, dim, std::move(roots), std::move(nodes));
}

void put_hrt(ByteWriter& out, const HrtIndex& index) {
  const auto& p = index.params();
  out.put(static_cast<std::uint64_t>(p.index_size));
  out.put(static_cast<std::uint64_t>(p.repetitions));
  out.put(static_cast<std::uint64_t>(p.tokens));
  out.put(static_cast<std::uint32_t>(p.family));
  out.put(p.width);
  out.put(static_cast<std::uint32_t>(index.metric()));
  out.put(static_cast<std::uint64_t>(index.num_shards()));
  put_matrix(out, index.samples());
  put_vector(out, index.sample_points());
  put_vector(out, index.sample_shards());
  out.put(static_cast<std::uint64_t>(index.repetitions().size()));
  for (const auto& rep : index.repetitions()) {
    const auto& f = rep.functions;
    out.put(static_cast<std::uint32_t>(f.family));
    put_vector(out, f.coordinates);
    put_matrix(out, f.projections);
    out.put(static_cast<std::uint64_t>(f.offsets.size()));
    out.put_array(f.offsets.data(), static_cast<std::size_t>(f.offsets.size()));
    out.put(f.width);
    out.put(static_cast<std::uint64_t>(rep.keys.rows()));
    out.put(static_cast<std::uint64_t>(rep.keys.cols()));
    out.put_array(rep.keys.data(), static_cast<std::size_t>(rep.keys.size()));
    put_vector(out, rep.entries);
  }
}

HrtIndex get_hrt(ByteReader& in) {
  HrtParams p;
  p.index_size = in.get<std::uint64_t>();
  p.repetitions = in.get<std::uint64_t>();
  p.tokens = in.get<std::uint64_t>();
  p.family = static_cast<LshFamilyTag>(in.get<std::uint32_t>());
  p.width = in.get<float>();
  const auto metric = static_cast<MetricTag>(in.get<std::uint32_t>());
  const auto shards = in.get<std::uint64_t>();
  RowMatrixF samples = get_matrix(in);
  auto points = get_vector<PointId>(in);
  auto sample_shards = get_vector<ShardId>(in);
  const auto count = in.get<std::uint64_t>();
  in.need(count, 4);
  std::vector<HrtIndex::Repetition> reps(count);
  for (auto& rep : reps) {
    auto& f = rep.functions;
    f.family = static_cast<LshFamilyTag>(in.get<std::uint32_t>());
    f.coordinates = get_vector<std::uint32_t>(in);
    f.projections = get_matrix(in);
    const auto offsets = in.get<std::uint64_t>();
    in.need(offsets, 4);
    f.offsets.resize(static_cast<Eigen::Index>(offsets));
    in.get_array(f.offsets.data(), offsets);
    f.width = in.get<float>();
    const auto rows = in.get<std::uint64_t>();
    const auto cols = in.get<std::uint64_t>();
    if (cols != 0) in.need(rows, cols * 4);
    rep.keys.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.get_array(rep.keys.data(), static_cast<std::size_t>(rep.keys.size()));
    rep.entries = get_vector<std::uint32_t>(in);
  }
  return HrtIndex(p, metric, shards, std::move(samples), std::move(points), std::move(sample_shards), std::move(reps));
}

void put_pyramid(ByteWriter& out, const PyramidRouter& router) {
  out.put(static_cast<std::uint32_t>(router.metric()));
  out.put(static_cast<std::uint64_t>(router.num_shards()));
  put_matrix(out, router.centers());
  put_vector(out, router.labels());
}

PyramidRouter get_pyramid(ByteReader& in) {
  const auto metric = static_cast<MetricTag>(in.get<std::uint32_t>());
  const auto shards = in.get<std::uint64_t>();
  RowMatrixF centers = get_matrix(in);
  auto labels = get_vector<ShardId>(in);
  return PyramidRouter(std::move(centers), std::move(labels), shards, metric);
}

}  // namespace

std::vector<std::uint8_t> serialize_router(const Router& router) {
  ByteWriter out;
  out.put(kRouterMagic);
  out.put(kRouterVersion);
  out.put(static_cast<std::uint32_t>(router.index() + 1));
  if (const auto* kmr = std::get_if<KmrTree>(&router)) put_kmr(out, *kmr);
  else if (const auto* hrt = std::get_if<HrtIndex>(&router)) put_hrt(out, *hrt);
  else put_pyramid(out, std::get<PyramidRouter>(router));
  return std::move(out.bytes());
}

Router deserialize_router(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, "router");
  if (in.get<std::uint32_t>() != kRouterMagic) in.fail("bad magic");
  if (in.get<std::uint32_t>() != kRouterVersion) in.fail("unsupported version");
  const auto kind = static_cast<RouterKind>(in.get<std::uint32_t>());
  try {
    Router out;
    switch (kind) {
      case RouterKind::Kmr: out = get_kmr(in); break;
      case RouterKind::Hrt: out = get_hrt(in); break;
      case RouterKind::Pyramid: out = get_pyramid(in); break;
      default: in.fail("unknown router kind");
    }
    in.expect_done();
    return out;
  } catch (const InputError& e) {
    in.fail(e.what());
  }
}

void write_router(const std::filesystem::path& path, const Router& router) {
  write_file(path, serialize_router(router));
}

Router read_router(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return deserialize_router(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t state) {
  for (std::uint8_t b : bytes) {
    state ^= b;
    state *= 0x100000001b3ULL;
  }
  return state;
}

std::string hex64(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << value;
  return out.str();
}

std::string file_hash(const std::filesystem::path& path) { return hex64(fnv1a(read_file(path))); }

std::string dataset_hash(const Dataset& data) {
  ByteWriter header;
  header.put(static_cast<std::uint64_t>(data.size()));
  header.put(static_cast<std::uint64_t>(data.dim()));
  std::uint64_t h = fnv1a(header.bytes());
  const auto* raw = reinterpret_cast<const std::uint8_t*>(data.values().data());
  h = fnv1a({raw, static_cast<std::size_t>(data.values().size()) * sizeof(float)}, h);
  return hex64(h);
}

}  // namespace shardann
