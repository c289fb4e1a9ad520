#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace xncaps {

namespace detail {
inline std::atomic<std::size_t>& worker_count_slot() {
  static std::atomic<std::size_t> count{1};
  return count;
}
}  // namespace detail

/// Number of workers used by parallel_for. Defaults to 1.
inline std::size_t worker_count() { return detail::worker_count_slot().load(); }

/// Sets the worker count; values below 1 clamp to 1.
inline void set_worker_count(std::size_t n) { detail::worker_count_slot().store(n ? n : 1); }

/// Runs body(begin, end) over a static partition of [0, n) into contiguous
/// chunks, one per worker. Chunks must touch disjoint outputs; under that
/// contract results are bit-identical for any worker count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1 || n <= 1) {
    body(0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  body(0, std::min(n, chunk));
  for (auto& t : pool) t.join();
}

}  // namespace xncaps
