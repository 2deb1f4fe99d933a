#pragma once

// Deterministic data parallelism: workers write disjoint index ranges of
// preallocated buffers, reductions always run serially in index order, so
// results are bitwise identical for any thread count.

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace modlab {

inline std::atomic<int>& thread_count_slot() {
  static std::atomic<int> n{0};  // 0 = hardware concurrency
  return n;
}

inline void set_thread_count(int n) { thread_count_slot().store(n < 0 ? 0 : n); }

inline int thread_count() {
  int n = thread_count_slot().load();
  if (n > 0) return n;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// fn(i) for i in [0, n); chunked contiguously over the configured threads.
template <class F>
void parallel_for(std::size_t n, F&& fn) {
  int workers = thread_count();
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t chunks = static_cast<std::size_t>(workers);
  if (chunks > n) chunks = n;
  std::size_t per = (n + chunks - 1) / chunks;
  std::vector<std::thread> pool;
  pool.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    std::size_t lo = c * per;
    std::size_t hi = lo + per < n ? lo + per : n;
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace modlab
