#include "shardann/parallel.hpp"

#include <atomic>

namespace shardann {

namespace {
std::atomic<std::size_t> g_threads{0};
}

void set_num_threads(std::size_t threads) { g_threads = threads; }

std::size_t num_threads() {
  const std::size_t t = g_threads.load();
  if (t != 0) return t;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace shardann
