#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace jeq {

/// Number of workers to use when the caller passed 0 ("auto").
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Data-parallel map over [0, count): body(i) must only write state owned by
/// index i (disjoint ranges, no shared mutable state). Reductions stay with
/// the caller and run serially in a fixed order, so results do not depend on
/// the thread count.
template <class F>
void parallel_for(std::size_t count, int threads, F&& body) {
  threads = resolve_threads(threads);
  if (threads <= 1 || count < 2048) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::size_t nchunk = static_cast<std::size_t>(threads);
  if (nchunk > count) nchunk = count;
  std::vector<std::thread> pool;
  pool.reserve(nchunk);
  std::size_t base = count / nchunk, rem = count % nchunk, lo = 0;
  for (std::size_t c = 0; c < nchunk; ++c) {
    std::size_t hi = lo + base + (c < rem ? 1 : 0);
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
    lo = hi;
  }
  for (auto& th : pool) th.join();
}

}  // namespace jeq
