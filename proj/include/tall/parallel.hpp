#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace tall {

// Global worker cap, set once by the CLI --threads flag. 0 means
// hardware_concurrency. Workers only ever write disjoint output ranges, so
// results are bitwise identical for any thread count.
namespace detail {
inline int& thread_cap() {
  static int cap = 0;
  return cap;
}
}  // namespace detail

inline void set_max_threads(int n) { detail::thread_cap() = n; }

inline int max_threads() {
  int cap = detail::thread_cap();
  if (cap > 0) return cap;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(begin, end) over contiguous chunks of [0, n). Falls back to a
// plain call when the range is small or only one worker is available.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t grain = 1) {
  std::size_t workers = static_cast<std::size_t>(max_threads());
  if (workers <= 1 || n <= grain) {
    fn(std::size_t{0}, n);
    return;
  }
  workers = std::min(workers, (n + grain - 1) / grain);
  std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    std::size_t lo = w * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  fn(std::size_t{0}, std::min(n, chunk));
  for (auto& t : pool) t.join();
}

}  // namespace tall
