#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace shardann {

/// Resolved parameters of one CLI invocation. Defaults follow the reference
/// parameterization (l=64, lambda=350, b=50000, three graph repetitions,
/// fanout 3, leaf size 2500).
struct RunConfig {
  std::string command;
  std::string mode;

  std::filesystem::path dataset;
  std::filesystem::path queries;
  std::filesystem::path graph;
  std::filesystem::path exact_graph;
  std::filesystem::path partition;
  std::filesystem::path centers;
  std::filesystem::path router;
  std::filesystem::path ground_truth;
  std::filesystem::path orders;
  std::filesystem::path input;
  std::filesystem::path out;

  std::string metric = "l2";
  std::size_t k = 10;
  std::size_t shards = 16;
  double epsilon = 0.05;
  double overlap = 1.2;
  std::string partitioner = "gp";
  std::string router_kind = "kmr";

  // graph building
  std::size_t graph_k = 10;
  std::size_t graph_repetitions = 3;
  std::size_t fanout = 3;
  std::size_t max_cluster_size = 2500;
  std::size_t top_level_pivots = 950;
  double pivot_fraction = 0.005;

  // routing
  std::size_t m = 50000;
  std::size_t l = 64;
  std::size_t lambda = 350;
  std::size_t budget = 50000;
  std::size_t reps = 8;
  std::size_t tokens = 24;
  std::size_t window = 100;
  std::string family;  // empty: metric default
  std::string aggregation = "ranking";
  std::size_t nearest = 32;  // pyramid: T nearest aggregated centers

  // partitioners
  std::size_t sample_size = 10000;

  // evaluate
  bool scan = false;
  std::vector<std::size_t> m_grid{1000, 5000, 20000};
  std::vector<std::size_t> sweep_repetitions{1, 2, 3};
  std::vector<std::size_t> sweep_fanout{1, 3};
  std::vector<std::size_t> sweep_cluster_sizes{100, 500, 2500};

  // generate
  std::string kind = "sift";
  std::size_t n = 10000;
  std::size_t dim = 128;
  std::size_t flips = 1;

  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

/// Parses argv (flags override an optional --config JSON file) into a config.
RunConfig parse_command_line(int argc, const char* const* argv);

/// Executes one subcommand; throws on failure.
void run_pipeline(const RunConfig& config);

/// parse_command_line + run_pipeline with errors reported on stderr; returns
/// the process exit status.
int run_cli(int argc, const char* const* argv);

}  // namespace shardann
