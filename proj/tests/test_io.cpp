#include <doctest.h>

#include <unistd.h>

#include <cstring>
#include <filesystem>

#include "helpers.hpp"
#include "shardann/eval.hpp"
#include "shardann/io.hpp"
#include "shardann/synthetic.hpp"

using namespace shardann;
using testing::matrix;
using testing::random_dataset;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("shardann_io_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

const TempDir& tmp() {
  static TempDir dir;
  return dir;
}

template <class T>
void put(std::vector<std::uint8_t>& bytes, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  bytes.insert(bytes.end(), p, p + sizeof(T));
}

template <class T>
void poke(std::vector<std::uint8_t>& bytes, std::size_t offset, T value) {
  std::memcpy(bytes.data() + offset, &value, sizeof(T));
}

std::string format_error(const fs::path& path, auto reader) {
  try {
    reader(path);
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("fbin layout") {
  const RowMatrixF v = matrix({{1, 2, 3}, {4, 5, 6}});
  write_vectors(tmp() / "a.fbin", VectorFormat::Fbin, v);
  const auto bytes = read_file(tmp() / "a.fbin");
  REQUIRE(bytes.size() == 8 + 6 * 4);
  std::uint32_t n = 0, d = 0;
  std::memcpy(&n, bytes.data(), 4);
  std::memcpy(&d, bytes.data() + 4, 4);
  CHECK(n == 2);
  CHECK(d == 3);
  float last = 0;
  std::memcpy(&last, bytes.data() + 28, 4);
  CHECK(last == 6.0F);
}

TEST_CASE("vector formats round trip") {
  const Dataset data = random_dataset(1000, 24, 1);
  for (auto format : {VectorFormat::Fbin, VectorFormat::Fvecs}) {
    const fs::path path = tmp() / ("rt." + std::string(to_string(format)));
    write_vectors(path, format, data.values());
    CHECK(format_for_path(path) == format);
    const Dataset back = read_vectors(path, MetricTag::L2);
    CHECK(std::memcmp(back.values().data(), data.values().data(), data.values().size() * sizeof(float)) == 0);
  }
  RowMatrixF ints(3, 2);
  ints << 0, 255, 7, 1, 128, 3;
  for (auto format : {VectorFormat::U8bin, VectorFormat::Ibin, VectorFormat::Ivecs}) {
    const fs::path path = tmp() / ("ints." + std::string(to_string(format)));
    write_vectors(path, format, ints);
    CHECK(read_matrix(path, format) == ints);
  }
  RowMatrixF negative = ints;
  negative(0, 0) = -1;
  CHECK_THROWS_AS(write_vectors(tmp() / "neg.u8bin", VectorFormat::U8bin, negative), InputError);
  CHECK_NOTHROW(write_vectors(tmp() / "neg.ibin", VectorFormat::Ibin, negative));
  negative(0, 0) = 0.5F;
  CHECK_THROWS_AS(write_vectors(tmp() / "half.ibin", VectorFormat::Ibin, negative), InputError);
  CHECK(parse_vector_format("u8bin") == VectorFormat::U8bin);
  CHECK_THROWS_AS(parse_vector_format("bvecs"), InputError);
  CHECK_THROWS_AS(format_for_path("x.txt"), InputError);
}

TEST_CASE("malformed vector files") {
  SUBCASE("fvecs with mixed dimensions") {
    std::vector<std::uint8_t> bytes;
    put<std::int32_t>(bytes, 2);
    put(bytes, 1.0F), put(bytes, 2.0F);
    put<std::int32_t>(bytes, 3);
    put(bytes, 1.0F), put(bytes, 2.0F), put(bytes, 3.0F);
    write_file(tmp() / "mixed.fvecs", bytes);
    const std::string msg = format_error(tmp() / "mixed.fvecs", [](const fs::path& p) { read_matrix(p, VectorFormat::Fvecs); });
    CHECK(msg.find("dimension 3 differs from 2 at byte offset 12") != std::string::npos);
  }
  SUBCASE("truncated fbin") {
    write_vectors(tmp() / "t.fbin", VectorFormat::Fbin, matrix({{1, 2}, {3, 4}}));
    auto bytes = read_file(tmp() / "t.fbin");
    bytes.resize(bytes.size() - 2);
    write_file(tmp() / "t.fbin", bytes);
    const std::string msg = format_error(tmp() / "t.fbin", [](const fs::path& p) { read_matrix(p, VectorFormat::Fbin); });
    CHECK(msg.find("byte offset") != std::string::npos);
  }
  SUBCASE("zero count") {
    std::vector<std::uint8_t> bytes;
    put<std::uint32_t>(bytes, 0);
    put<std::uint32_t>(bytes, 4);
    write_file(tmp() / "z.fbin", bytes);
    const std::string msg = format_error(tmp() / "z.fbin", [](const fs::path& p) { read_matrix(p, VectorFormat::Fbin); });
    CHECK(msg.find("zero vector count at byte offset 8") != std::string::npos);
  }
  SUBCASE("trailing bytes") {
    write_vectors(tmp() / "x.fbin", VectorFormat::Fbin, matrix({{1}}));
    auto bytes = read_file(tmp() / "x.fbin");
    bytes.push_back(0);
    write_file(tmp() / "x.fbin", bytes);
    CHECK_THROWS_AS(read_matrix(tmp() / "x.fbin", VectorFormat::Fbin), FormatError);
  }
  CHECK_THROWS_AS(read_file(tmp() / "missing.fbin"), InputError);
}

TEST_CASE("graph round trip") {
  const Dataset data = random_dataset(300, 5, 2);
  const KnnGraph g = build_exact_knn(data, 7);
  write_graph(tmp() / "g.bin", g);
  CHECK(read_graph(tmp() / "g.bin") == g);
  const KnnGraph ragged({{1, 2}, {}, {0}}, 4);
  write_graph(tmp() / "r.bin", ragged);
  CHECK(read_graph(tmp() / "r.bin", 4) == ragged);
  CHECK(read_graph(tmp() / "r.bin").degree_bound() == 2);
  CHECK_THROWS_AS(read_graph(tmp() / "r.bin", 1), FormatError);
}

TEST_CASE("partition round trip") {
  const Partition disjoint = Partition::disjoint({2, 0, 1, 1, 0}, 3, 0.05);
  export_partition(disjoint, tmp() / "d.part");
  CHECK(import_partition(tmp() / "d.part") == disjoint);

  const Partition overlapping = Partition::overlapping({{0, 2}, {1}, {0, 1, 2}, {2}}, 3, 0.1, 2);
  export_partition(overlapping, tmp() / "o.part");
  const Partition back = import_partition(tmp() / "o.part", 0.1, 2);
  CHECK(back == overlapping);
  CHECK(back.size_divisor() == 2);

  SUBCASE("shard id equal to s") {
    auto bytes = read_file(tmp() / "d.part");
    poke<std::uint32_t>(bytes, 16 + 4 * 4, 3);
    write_file(tmp() / "bad.part", bytes);
    const std::string msg = format_error(tmp() / "bad.part", [](const fs::path& p) { import_partition(p); });
    CHECK(msg.find("shard id 3 >= 3") != std::string::npos);
  }
  SUBCASE("bad magic") {
    auto bytes = read_file(tmp() / "d.part");
    bytes[0] ^= 0xFF;
    write_file(tmp() / "bad.part", bytes);
    CHECK_THROWS_AS(import_partition(tmp() / "bad.part"), FormatError);
  }
  SUBCASE("unsorted shard list") {
    auto bytes = read_file(tmp() / "o.part");
    // lists start after the header and five offsets; node 0 holds {0, 2}
    poke<std::uint32_t>(bytes, 16 + 5 * 8, 2);
    poke<std::uint32_t>(bytes, 16 + 5 * 8 + 4, 0);
    write_file(tmp() / "bad.part", bytes);
    CHECK_THROWS_AS(import_partition(tmp() / "bad.part"), FormatError);
  }
}

TEST_CASE("ground truth and probe orders round trip") {
  const Dataset data = random_dataset(200, 4, 3);
  const Dataset queries = random_dataset(20, 4, 4);
  const GroundTruth gt = compute_ground_truth(data, queries, 5);
  write_ground_truth(tmp() / "gt.bin", gt);
  const GroundTruth back = read_ground_truth(tmp() / "gt.bin");
  CHECK(back.ids == gt.ids);
  CHECK(back.distances == gt.distances);

  const Partition p = Partition::disjoint(std::vector<ShardId>(200, 1), 3, 5.0);
  const auto orders = oracle_probe_orders(gt, p, 5);
  write_probe_orders(tmp() / "o.bin", orders);
  CHECK(read_probe_orders(tmp() / "o.bin") == orders);

  auto bytes = read_file(tmp() / "o.bin");
  bytes.resize(bytes.size() - 1);
  write_file(tmp() / "o.bin", bytes);
  CHECK_THROWS_AS(read_probe_orders(tmp() / "o.bin"), FormatError);
}

TEST_CASE("routers round trip") {
  const Dataset data = sift_like(1500, 4);
  const Partition p = partition_graph(build_exact_knn(data, 8), 4, 0.05, 1);
  HrtParams hp;
  hp.index_size = 600;
  hp.repetitions = 3;
  hp.tokens = 10;
  PyramidParams pp;
  pp.sample_size = 300;
  const std::vector<Router> routers{kmr_train(data, p, KmrParams{8, 300, 40, 10}, 2), hrt_train(data, p, hp, 3),
                                    pyramid_partition(data, 4, 0.05, 4, pp).router};
  for (std::size_t i = 0; i < routers.size(); ++i) {
    const fs::path path = tmp() / ("router" + std::to_string(i));
    write_router(path, routers[i]);
    const Router back = read_router(path);
    REQUIRE(back.index() == i);
    std::visit(
        [&](const auto& original) {
          using T = std::decay_t<decltype(original)>;
          const T& copy = std::get<T>(back);
          if constexpr (std::is_same_v<T, PyramidRouter>) {
            CHECK(copy.centers() == original.centers());
            CHECK(copy.labels() == original.labels());
            CHECK(copy.route(data.row(3), 8) == original.route(data.row(3), 8));
          } else {
            CHECK(copy == original);
          }
        },
        routers[i]);
    auto bytes = serialize_router(routers[i]);
    CHECK(bytes == read_file(path));
    bytes[4] = 99;  // version
    CHECK_THROWS_AS(deserialize_router(bytes), FormatError);
    bytes = serialize_router(routers[i]);
    bytes.resize(bytes.size() / 2);
    CHECK_THROWS_AS(deserialize_router(bytes), FormatError);
  }
}

TEST_CASE("content hashes") {
  CHECK(hex64(fnv1a(std::vector<std::uint8_t>{})) == "cbf29ce484222325");
  CHECK(hex64(fnv1a(std::vector<std::uint8_t>{'a'})) == "af63dc4c8601ec8c");
  const Dataset a = random_dataset(10, 3, 5);
  RowMatrixF changed = a.values();
  changed(9, 2) += 1.0F;
  CHECK(dataset_hash(a) == dataset_hash(random_dataset(10, 3, 5)));
  CHECK(dataset_hash(a) != dataset_hash(Dataset(changed, MetricTag::L2)));
  CHECK(dataset_hash(a) == dataset_hash(Dataset(a.values(), MetricTag::Angular)));
  write_vectors(tmp() / "h.fbin", VectorFormat::Fbin, a.values());
  CHECK(file_hash(tmp() / "h.fbin") == hex64(fnv1a(read_file(tmp() / "h.fbin"))));
}
