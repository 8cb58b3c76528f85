#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "shardann/core.hpp"
#include "shardann/knn_graph.hpp"
#include "shardann/partition.hpp"
#include "shardann/routing.hpp"

namespace shardann {

enum class VectorFormat : std::uint8_t { Fbin, Ibin, U8bin, Fvecs, Ivecs };

std::string_view to_string(VectorFormat format);
VectorFormat parse_vector_format(std::string_view name);
/// Format implied by the file extension (.fbin, .ibin, .u8bin, .fvecs, .ivecs).
VectorFormat format_for_path(const std::filesystem::path& path);

/// Row-major values; integer formats widen to float.
RowMatrixF read_matrix(const std::filesystem::path& path, VectorFormat format);
Dataset read_vectors(const std::filesystem::path& path, VectorFormat format, MetricTag metric);
inline Dataset read_vectors(const std::filesystem::path& path, MetricTag metric) {
  return read_vectors(path, format_for_path(path), metric);
}
/// Integer formats require integral values in range.
void write_vectors(const std::filesystem::path& path, VectorFormat format, const RowMatrixF& values);

/// CSR graph file: u64 n, u64 edges, (n + 1) u64 offsets, u32 neighbor ids.
/// The degree bound is not stored; 0 takes the maximum out-degree.
void write_graph(const std::filesystem::path& path, const KnnGraph& graph);
KnnGraph read_graph(const std::filesystem::path& path, std::size_t degree_bound = 0);

/// u32 magic, n, s, flags (bit 0: overlapping); then n u32 shard ids, or
/// (n + 1) u64 offsets and the u32 shard lists.
void export_partition(const Partition& p, const std::filesystem::path& path);
Partition import_partition(const std::filesystem::path& path, double epsilon = 0.05, std::size_t size_divisor = 0);

/// u32 queries, u32 k, ids (u32), distances (f32).
void write_ground_truth(const std::filesystem::path& path, const GroundTruth& gt);
GroundTruth read_ground_truth(const std::filesystem::path& path);

void write_probe_orders(const std::filesystem::path& path, std::span<const ProbeOrder> orders);
std::vector<ProbeOrder> read_probe_orders(const std::filesystem::path& path);

enum class RouterKind : std::uint32_t { Kmr = 1, Hrt = 2, Pyramid = 3 };
using Router = std::variant<KmrTree, HrtIndex, PyramidRouter>;

/// Versioned container: magic, version, kind, then the router's parameters
/// and payload.
void write_router(const std::filesystem::path& path, const Router& router);
Router read_router(const std::filesystem::path& path);

std::vector<std::uint8_t> serialize_router(const Router& router);
Router deserialize_router(std::span<const std::uint8_t> bytes);

/// FNV-1a 64.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t state = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);
std::string file_hash(const std::filesystem::path& path);
/// Hash over shape and raw values; the metric tag is not part of it.
std::string dataset_hash(const Dataset& data);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace shardann
